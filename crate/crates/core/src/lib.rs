//! Numerical verification of submanifold geometry in almost contact metric
//! and Kenmotsu manifolds.
//!
//! The ambient structure `(φ, ξ, η, g)` and the immersion are given as
//! expressions on a single global chart. All derivatives come from
//! second-order jets, so identities between tensors can be checked to
//! machine precision at sampled points.

mod error;
pub mod decomposition;
pub mod distribution;
pub mod expr;
pub mod immersion;
pub mod linalg;
pub mod manifold;
pub mod oracle;
pub mod report;
pub mod runner;
pub mod sampling;
pub mod scenario;
pub mod warped;

pub use error::{Error, Result};
pub use expr::{parse, Expr, Jet2};
