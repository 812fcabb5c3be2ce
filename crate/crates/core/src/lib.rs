//! Semi-Markov processes with non-exponential holding times: special
//! functions, Bernstein exponents, samplers, path simulation, Laplace
//! inversion, deterministic solvers for the backward equations and
//! scaling-limit experiments.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod error;
pub mod exec;
pub mod kolmogorov;
pub mod laplace;
pub mod limits;
pub mod quadrature;
pub mod samplers;
pub mod semi_markov;
pub mod special_fn;
pub mod stats;

pub use error::{Result, SmkError};
pub use exec::Execution;
