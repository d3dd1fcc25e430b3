pub mod finder;
pub mod modelcheck;
pub mod normalform;
pub mod saturation;
pub mod structures;
pub mod syntax;
pub mod tgconstruct;
