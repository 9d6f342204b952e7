//! Gaussian simulation of a measurement-induced dynamic squeezing gate: a
//! time-varying shear `p -> p + κ(t) x` realized with a squeezed ancilla,
//! homodyne detection and feed-forward, plus the analog control electronics,
//! a time-series experiment harness and the analysis of its output.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod electronics;
pub mod error;
pub mod experiment;
pub mod gate;
pub mod gaussian;
pub mod rng;

pub use error::{Error, Result};
