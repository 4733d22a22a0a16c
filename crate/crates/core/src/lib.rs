//! Alternating-direction implicit solver for the two-dimensional wave
//! equation with a distributed-order Caputo time derivative,
//!
//! ```text
//! ∫₁² p(β) ∂ᵝu/∂tᵝ dβ = Δu + f(x, y, t, u)   on (0, L1) × (0, L2) × (0, T]
//! ```
//!
//! with Dirichlet boundary data and initial displacement and velocity.

// `!(a > b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coefficients;
pub mod error;
pub mod model;
pub mod operators;
pub mod reference;
pub mod stepper;

pub use analysis::{error_norms, observed_order, run_study, ErrorNorms, OrderBasis, Schedule, StudyReport};
pub use coefficients::CoefficientTable;
pub use error::{Error, Result};
pub use model::{Discretization, Field, ProblemSpec, Resolution};
pub use stepper::{run, Solver};
