//! Two qubits in a Lorentzian bath that is engineered by an intense
//! oscillator disturbance.
//!
//! The bath is replaced by one (undisturbed) or two (disturbed) damped
//! pseudo-modes whose Lindblad dynamics reproduces the exact reduced
//! evolution of the qubits. Brute-force discretized-bath oracles in
//! [`oracle`] check both the engineered spectrum and the master equation.

// `!(a < b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod model;
pub mod observables;
pub mod operators;
pub mod oracle;
pub mod quadrature;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
