//! Truncated symmetric Fock space: occupation basis, ladder and Segal
//! operators, second quantization, coherent states and Wick symbols.

pub mod basis;
pub mod coherent;
pub mod ops;

pub use basis::{binomial, FockBasis};
pub use coherent::{
    coherent_overlap_formula, coherent_state, inner, tensor_with_spin_basis, wick_symbol, z_of,
    CoherentState, TAIL_WARN,
};
pub use ops::{
    dgamma, dump_operator, free_energies, gamma_free, ladder, number_operator, segal_field,
    FockOperator, Ladder, OpKind, DENSE_CAP,
};
