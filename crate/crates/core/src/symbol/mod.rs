//! Polynomial phase-space symbols in the `(z, z̄)` monomial basis with heat operator,
//! Wick and anti-Wick quantization, the composition series and the first-order
//! cross term for affine left factors.

pub mod c1;
pub mod compose;
pub mod dump;
pub mod poly;
pub mod quantize;

pub use c1::{c1_cross, c1_cross_left, c1_cross_right, AffineSymbol, DifferentiableSymbol, FnSymbol};
pub use compose::{c_k, mizrahi_compose, mizrahi_partial, mizrahi_remainder_bound, surrogate_norm};
pub use dump::{SymbolDump, TermRecord, SYMBOL_DUMP_VERSION};
pub use poly::{multi_indices, raw_mul, Coefficient, Key, MatrixSymbol, PolySymbol, RawPoly, ScalarSymbol};
pub use quantize::{anti_wick_quantize, wick_quantize, Quantizable};
