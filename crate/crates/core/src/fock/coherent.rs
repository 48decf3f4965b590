use super::basis::FockBasis;
use super::ops::{FockOperator, OpKind};
use crate::error::{Error, Result};
use crate::linalg::{c, SpinMatrix};
use crate::model::PhaseVector;
use nalgebra::DVector;
use num_complex::Complex64 as C64;

/// Tail-mass level above which a warning is logged.
pub const TAIL_WARN: f64 = 1e-10;

/// Photon part of the coherent state `Ψ_{X,h}` on the truncated basis.
#[derive(Debug, Clone)]
pub struct CoherentState {
    pub amplitudes: DVector<C64>,
    /// `1 − ‖truncated state‖²` before renormalization.
    pub tail_mass: f64,
}

/// `z_j = (q_j + i p_j) / √(2h)`.
pub fn z_of(x: &PhaseVector, h: f64) -> Vec<C64> {
    let s = 1.0 / (2.0 * h).sqrt();
    (0..x.dim()).map(|j| C64::new(x.q[j], x.p[j]) * s).collect()
}

/// Amplitudes `e^{−|z|²/2} z^α / √α!`, renormalized; the lost mass is reported.
pub fn coherent_state(basis: &FockBasis, x: &PhaseVector, h: f64) -> Result<CoherentState> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveH(h));
    }
    if x.dim() != basis.modes() {
        return Err(Error::Dimension {
            expected: basis.modes(),
            got: x.dim(),
        });
    }
    let z = z_of(x, h);
    let n = basis.n_max();
    let pw: Vec<Vec<C64>> = z
        .iter()
        .map(|&zj| {
            let mut row = Vec::with_capacity(n + 1);
            row.push(c(1.0));
            for k in 1..=n {
                let prev = row[k - 1];
                row.push(prev * zj / (k as f64).sqrt());
            }
            row
        })
        .collect();
    let norm2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
    let pref = (-0.5 * norm2).exp();
    let amps = DVector::from_iterator(
        basis.dim(),
        basis.states().iter().map(|alpha| {
            alpha
                .iter()
                .enumerate()
                .fold(c(pref), |acc, (j, &k)| acc * pw[j][k as usize])
        }),
    );
    let kept = amps.norm_squared();
    let tail = (1.0 - kept).max(0.0);
    if tail > TAIL_WARN {
        log::warn!(
            "coherent state tail mass {tail:.3e} exceeds {TAIL_WARN:.0e} (n_max = {n}, mean photons {:.3})",
            norm2
        );
    }
    Ok(CoherentState {
        amplitudes: amps * c(1.0 / kept.sqrt()),
        tail_mass: tail,
    })
}

/// Closed form `⟨Ψ_X, Ψ_Y⟩ = exp(−|X−Y|²/(4h) + iσ(X,Y)/(2h))`.
pub fn coherent_overlap_formula(x: &PhaseVector, y: &PhaseVector, h: f64) -> C64 {
    let d = x - y;
    C64::new(-d.dot(&d) / (4.0 * h), x.sigma(y) / (2.0 * h)).exp()
}

/// Truncated inner product `Σ ψ_α φ̄_α` (antilinear in the second slot).
pub fn inner(psi: &DVector<C64>, phi: &DVector<C64>) -> C64 {
    psi.iter().zip(phi.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// `Ψ ⊗ e_i` in the tensor layout (spin index fastest).
pub fn tensor_with_spin_basis(photon: &DVector<C64>, spin_dim: usize, i: usize) -> DVector<C64> {
    let mut v = DVector::zeros(photon.len() * spin_dim);
    for (k, a) in photon.iter().enumerate() {
        v[k * spin_dim + i] = *a;
    }
    v
}

/// Wick symbol of `A` at `X`: the matrix `S_{ji} = ⟨A(Ψ⊗e_i), Ψ⊗e_j⟩`.
///
/// Fails with a truncation error when the coherent tail mass exceeds `threshold`.
pub fn wick_symbol(
    a: &FockOperator,
    basis: &FockBasis,
    x: &PhaseVector,
    h: f64,
    spin_dim: usize,
    threshold: f64,
) -> Result<SpinMatrix> {
    let cs = coherent_state(basis, x, h)?;
    if cs.tail_mass > threshold {
        return Err(Error::Truncation {
            tail: cs.tail_mass,
            threshold,
            n_max: basis.n_max(),
        });
    }
    let psi = &cs.amplitudes;
    match a.kind {
        OpKind::Photon => {
            let e = a.matrix_element(psi.as_slice(), psi.as_slice());
            Ok(SpinMatrix::identity(spin_dim, spin_dim) * e)
        }
        OpKind::Tensor { spin_dim: sd } => {
            if sd != spin_dim {
                return Err(Error::Dimension {
                    expected: spin_dim,
                    got: sd,
                });
            }
            let vs: Vec<DVector<C64>> = (0..sd).map(|i| tensor_with_spin_basis(psi, sd, i)).collect();
            let mut s = SpinMatrix::zeros(sd, sd);
            for i in 0..sd {
                for j in 0..sd {
                    s[(j, i)] = a.matrix_element(vs[j].as_slice(), vs[i].as_slice());
                }
            }
            Ok(s)
        }
    }
}
