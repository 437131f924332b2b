//! Distinguishability experiments for nonparametric hypotheses on `[0,1)`.
//!
//! The library discretizes measures to a dyadic grid and provides, on top of
//! that, the total-variation lower bound machinery (`kraft`), the partition
//! test with Monte Carlo error rates (`partition`), Gaussian sequence-model
//! detection (`gaussian`), Poisson process testing (`poisson`), the
//! deconvolution reduction (`deconvolve`), and sequential discernibility
//! simulation (`discern`). The `harness` module backs the CLI binary.

pub mod acceptance;
pub mod deconvolve;
pub mod discern;
pub mod error;
pub mod gaussian;
pub mod kraft;
pub mod measures;
pub mod partition;
pub mod harness;
pub mod poisson;

pub use error::{Error, Result};
