//! Small finite models for guarded sentences with transitive guards: the horizontal and
//! vertical sentences, the grid D, the circular connection of copies of D, the reduction
//! of 2-types and the bounded finite-satisfiability deciders.

mod decide;
mod grid;
mod phi;
mod reduce;

use thiserror::Error;

pub use decide::{decide_finsat_gftg, decide_finsat_gfutg, CertificateKind, FinsatBudgets, FinsatReport};
pub use grid::{
    assemble, build_d, build_small_model, connect_pair_to_row, equalize_realizations, Allocation, GridStructure, SmallModel,
};
pub use phi::{both_variable_tuples, build_phi_b, build_phi_c, expand_loops, is_two_variable, two_types_respect_foralls};
pub use reduce::{reduce_two_types, Reduction};

use crate::structures::StructureError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TgError {
    #[error("the signature declares no Aux symbol")]
    NoAux,
    #[error("the set of 1-types is empty")]
    NoTypes,
    #[error("2-type {0} is degenerate or not guarded by Aux")]
    NotGuarded(String),
    #[error("some 2-type violates a forall conjunct")]
    ForallViolatedByPair,
    #[error("the two structures realise different 1-types")]
    TypesDiffer,
    #[error("sizes differ: {0} and {1}")]
    SizeMismatch(u32, u32),
    #[error("the structures have different signatures")]
    SignatureMismatch,
    #[error("no row pair realises {0}")]
    NoTemplate(String),
    #[error("the pair and the row do not fit together")]
    BadConnection,
    #[error("a column has more pairs than there are rows")]
    RowBudget,
    #[error("a fact has more than two distinct elements")]
    WideFact,
    #[error("no {0} model within size {1}")]
    NoModel(&'static str, u32),
    #[error("{what} is not a model ({violations} violations)")]
    NotAModel { what: String, violations: usize },
    #[error(transparent)]
    Structure(#[from] StructureError),
}
