//! Finite relational structures, atomic types and the structure-building operations.

mod algebra;
mod jsonl;
mod store;
mod types;

use thiserror::Error;

pub use algebra::{
    disjoint_union, doubling, harmonized_doubling, harmonized_union, indistinguishable, is_guarded,
    strip_transitive_cross_facts,
};
pub use jsonl::{read_jsonl, write_jsonl};
pub use store::{Elem, Structure};
pub use types::{atomic_type, AtomicType, Literal, TypeArg, TypeAtom};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("element {0} is outside the domain")]
    OutOfDomain(Elem),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("constant `{0}` is not interpreted")]
    UninterpretedConstant(String),
    #[error("relation `{rel}` has arity {expected}, got a tuple of length {found}")]
    Arity { rel: String, expected: usize, found: usize },
    #[error("{0}")]
    Constants(String),
    #[error("structures are over different signatures")]
    SignatureMismatch,
    #[error("named parts differ")]
    NotHarmonized,
    #[error("empty family")]
    Empty,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}
