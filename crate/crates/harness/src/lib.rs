//! Experiment driver for the semiclassical expansion checks: plans, sweeps,
//! slope fits, self-tests and structured output.

pub mod convergence;
pub mod crosscheck;
pub mod error;
pub mod fit;
pub mod photon;
pub mod plan;
pub mod pool;
pub mod report;
pub mod selftest;
pub mod tolerances;

pub use error::{HarnessError, Result};
