//! Formula language: signatures, ASTs, parsing, printing, fragment analysis
//! and the translations between the triguarded fragment and GF with a universal role.

mod formula;
pub(crate) mod fragment;
mod parser;
mod printer;
mod signature;
mod translate;

use std::fmt;

use thiserror::Error;

pub use formula::{Formula, Term};
pub use fragment::{classify_fragment, Fragment, FragmentReport, Violation};
pub use parser::{parse_document, parse_formula, Document};
pub use printer::print_formula;
pub use signature::{RelId, Signature};
pub use translate::{gfu_to_tgf, tgf_to_gfu};

/// Line and column (both 1-based) of a token in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("lexical error at {pos}: {msg}")]
    Lex { pos: Pos, msg: String },
    #[error("syntax error at {pos}: {msg}")]
    Parse { pos: Pos, msg: String },
    #[error("undeclared relation symbol `{name}` at {pos}")]
    Undeclared { name: String, pos: Pos },
    #[error("relation `{name}` has arity {expected} but is applied to {found} arguments at {pos}")]
    Arity { name: String, expected: usize, found: usize, pos: Pos },
    #[error("signature error: {0}")]
    Signature(String),
    #[error("formula is not in the required fragment: {0}")]
    Fragment(String),
}
