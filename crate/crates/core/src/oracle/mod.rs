//! Exact dynamics on the truncated photon space: Hamiltonian assembly,
//! interaction-picture propagation and evolved Wick symbols.
//!
//! Only modes that couple to a spin are quantized; the remaining modes stay in a
//! coherent state that is transported by the free flow, so their contribution to
//! any linear observable is a classical scalar.

pub mod hamiltonian;
pub mod observable;
pub mod propagate;

pub use hamiltonian::{Hamiltonian, ModeSelection};
pub use observable::{evolved_wick_symbol, photon_rate_exact, EvolvedStates, LinearObservable, ObservableSpec, Oracle};
pub use propagate::{evolve_interaction_picture, PropagationLog, PropagationOptions, Propagator, StepRecord};

#[cfg(test)]
mod tests;
