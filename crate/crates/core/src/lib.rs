//! Synthesis and simulation of accelerated adiabatic (STIRAP/SATD) two-qubit
//! gates for fluxonium qubits coupled through an auxiliary mode.

// `!(x > 0.0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod circuits;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod lambda_model;
pub mod linalg;
pub mod metrics;
pub mod ode;
pub mod parallel;
pub mod pipeline;
pub mod pulses;
pub mod quad;
pub mod units;

pub use error::{Error, Result};
