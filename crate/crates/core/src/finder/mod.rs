//! Bounded search for finite models.

mod encode;
mod sat;
mod search;

pub use encode::{Problem, WorldId};
pub(crate) use encode::for_each_tuple;
pub use search::for_each_constant_map;
pub use sat::{Lit, Solver};
pub use search::{
    find_model, find_model_formula, for_each_structure, realized_types, satisfies_mode, satisfies_structural,
    transitive_closure, SearchConfig,
};
