//! Scalar expressions over named variables.
//!
//! Expressions are parsed once and evaluated either as plain `f64` or as
//! [`Jet2`] values, which carry exact first and second partial derivatives.

mod ast;
mod eval;
mod jet;
mod parse;

pub use ast::{BinOp, Constant, Expr, Func};
pub use eval::{Env, EvalError};
pub use jet::{Jet2, Scalar};
pub use parse::{parse, ParseError};
