//! Acceptance thresholds, in one place.

/// Relative residual for σ∘Op^{wick} = id and for the Mizrahi operator identity.
pub const CALCULUS_REL: f64 = 1e-6;
/// Coefficient residual regarded as exact (heat round trip, Wick ordering of q²+p²).
pub const EXACT_REL: f64 = 1e-12;
/// Coherent-state overlap against the closed form.
pub const OVERLAP_ABS: f64 = 1e-10;
/// Structural seed identity `σ(E_{mx}, B_{ny}) = ∇ρ(x−y)·(e_m × e_n)`.
pub const SEED_ABS: f64 = 1e-10;
/// Projector algebra of `Π_±`.
pub const PROJECTOR_ABS: f64 = 1e-12;
/// Dual-path agreement of the first two orders.
pub const DUAL_PATH_REL: f64 = 1e-6;
/// Unitarity defect, energy drift and tangent-vs-finite-difference residual.
pub const HYGIENE: f64 = 1e-6;
/// Errors below this are treated as an exact expansion (no slope fitted).
pub const EXACT_ERROR: f64 = 1e-8;
/// Agreement of the leading photon rate with `ε·Σ E^{free}·S`.
pub const PHOTON_SIGN_REL: f64 = 1e-8;
/// Step of the central-difference probe for tangents.
pub const FD_STEP: f64 = 1e-5;

/// Acceptance window for the fitted log-log slope of the order-`M` truncation error.
///
/// The expansion is `O(h^{M+1})`; `M = 0` also gets an upper bound because a
/// much steeper decay there would indicate the leading term is wired to the
/// wrong quantity.
pub fn slope_window(m: usize) -> (f64, Option<f64>) {
    if m == 0 {
        (0.8, Some(1.2))
    } else {
        (m as f64 + 0.7, None)
    }
}

/// Lower bound for the leading photon-rate slope.
pub const PHOTON_SLOPE_MIN: f64 = 0.8;
