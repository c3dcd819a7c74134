//! Desk-scale simulator and analysis toolkit for spin squeezing by dichromatic
//! quantum-nondemolition (QND) measurement of a collective atomic pseudo-spin.
//!
//! * [`atomic`]: polarizabilities, couplings and decoherence predictions.
//! * [`spin`]: Gaussian moment model of the collective spin.
//! * [`qnd`]: stochastic QND measurement and the strength/decoherence trade-off.
//! * [`sim`]: synthetic campaigns with the structure of the real experiment.
//! * [`analysis`]: binning, quadratic fits, noise budget and squeezing metric.
//! * [`config`]: TOML configuration with paper-scale defaults.
//! * [`predict`]: closed-form predictions for a configuration.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod atomic;
pub mod config;
pub mod predict;
pub mod error;
pub mod io;
pub mod qnd;
pub mod quadrature;
pub mod sim;
pub mod spin;

pub use error::{Error, Result};

/// Crate version, embedded into every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
