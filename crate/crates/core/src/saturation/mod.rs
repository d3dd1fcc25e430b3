//! Finite U-biquitous models by U-saturation of a table of copies of a small seed model.

mod blocks;
mod phi_star;
mod state;

use std::collections::BTreeSet;

use thiserror::Error;

pub use blocks::{build_blocks, select_entry_elements, Blocks, COPIES};
pub use phi_star::{add_loop_symbols, build_phi_star, tuple_type_formula, type_formula};
pub use state::{
    apply_record, saturate, saturate_with, FactRecord, SaturateOptions, SaturationState, SaturationTrace, StepRecord,
};

use crate::finder::{find_model, realized_types, SearchConfig};
use crate::normalform::NormalFormSentence;
use crate::structures::{AtomicType, Elem, Structure, StructureError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SaturationError {
    #[error("the set of 1-types is empty")]
    NoTypes,
    #[error("the signature declares no universal symbol")]
    NoUniversal,
    #[error("{what} is not a model ({violations} violations)")]
    NotAModel { what: String, violations: usize },
    #[error("the seed has no unnamed elements")]
    NoUnnamed,
    #[error("no U-connected pair realises {0} and {1}")]
    NoEntryPair(String, String),
    #[error("element {0} is named")]
    Named(Elem),
    #[error("elements {0} and {1} are already connected")]
    AlreadyConnected(Elem, Elem),
    #[error("step {step}: {msg}")]
    Invariant { step: usize, msg: String },
    #[error("no model within size {0}")]
    NoModel(u32),
    #[error("checker: {0}")]
    Check(String),
    #[error("trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// A seed for the construction: the 1-types realised in some U-biquitous model of `nf`,
/// the auxiliary sentence built from them and a smallest model of it.
#[derive(Clone, Debug)]
pub struct Seed {
    pub alpha: BTreeSet<AtomicType>,
    pub phi_star: NormalFormSentence,
    pub c_minus: Structure,
}

/// Finds a U-biquitous model of `nf` within `max_size`, takes its 1-types and returns a
/// smallest model of the auxiliary sentence within the same bound.
pub fn prepare_seed(nf: &NormalFormSentence, max_size: u32, tg: bool) -> Result<Seed, SaturationError> {
    if nf.signature.universal().is_none() {
        return Err(SaturationError::NoUniversal);
    }
    let cfg = SearchConfig::new(max_size).transitive(tg);
    let model = find_model(nf, &cfg.clone().ubiquitous(true)).ok_or(SaturationError::NoModel(max_size))?;
    let alpha = realized_types(&model).0;
    let phi_star = build_phi_star(nf, &alpha, tg)?;
    let c_minus = find_model(&phi_star, &cfg).ok_or(SaturationError::NoModel(max_size))?;
    Ok(Seed { alpha, phi_star, c_minus })
}
