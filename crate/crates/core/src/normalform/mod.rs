//! Normal forms: the conjunction-of-conjuncts shape, conversion of guarded sentences into a
//! disjunction of such sentences, and the enhanced shape used with transitive guards.

mod convert;
mod enhance;
mod sentence;

pub use convert::{to_normal_form, NormalFormError, NormalForms, FRESH_PREFIX};
pub use enhance::enhance_tg_normal_form;
pub use sentence::{
    aux_closure_conjunct, ConjunctClass, ExistsConjunct, ForallConjunct, ForallExists, NormalFormSentence,
};
