//! Manifold inexact augmented Lagrangian method (MIALM) for
//! `min f(X) + g(AX)` subject to `X'X = I`, with a manifold ADMM baseline,
//! the compressed-modes and sparse-PCA benchmark problems, and an experiment
//! harness.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod manifold;
pub mod numeric;
pub mod par;
pub mod problems;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
