//! Exact and semiclassical dynamics of fixed spins coupled to a discretized
//! quantized radiation field.
//!
//! * [`model`]: mode grid, couplings, helicity, spin operators, `Q_t`.
//! * [`fock`]: truncated Fock space, ladder and Segal operators, coherent states.
//! * [`symbol`]: polynomial phase-space symbols with Wick / anti-Wick / heat / Mizrahi calculus.
//! * [`oracle`]: exact interaction-picture propagation and evolved Wick symbols.
//! * [`hierarchy`]: the semiclassical coefficients `A^[j](t, X)` and their Maxwell–Bloch cross-checks.

pub mod error;
pub mod fock;
pub mod hierarchy;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod symbol;

pub use error::{Error, Result};
pub use linalg::SpinMatrix;
pub use model::{Model, ModelConfig, PhaseVector};
