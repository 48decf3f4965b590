use super::poly::{Coefficient, PolySymbol};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockOperator, OpKind};
use crate::linalg::{c, SpinMatrix};
use num_complex::Complex64 as C64;

/// Types that know how to turn a scalar photon operator into a full coefficient operator.
pub trait Quantizable: Coefficient {
    fn kind(&self) -> OpKind;
    /// Pushes `photon_entry · self` into `trip` at photon position `(row, col)`.
    fn push_entries(&self, row: usize, col: usize, photon_entry: C64, trip: &mut Vec<(usize, usize, C64)>);
}

impl Quantizable for C64 {
    fn kind(&self) -> OpKind {
        OpKind::Photon
    }
    fn push_entries(&self, row: usize, col: usize, e: C64, trip: &mut Vec<(usize, usize, C64)>) {
        trip.push((row, col, e * self));
    }
}

impl Quantizable for SpinMatrix {
    fn kind(&self) -> OpKind {
        OpKind::Tensor {
            spin_dim: self.nrows(),
        }
    }
    fn push_entries(&self, row: usize, col: usize, e: C64, trip: &mut Vec<(usize, usize, C64)>) {
        let n = self.nrows();
        for a in 0..n {
            for b in 0..n {
                let v = self[(a, b)];
                if v != c(0.0) {
                    trip.push((row * n + a, col * n + b, e * v));
                }
            }
        }
    }
}

/// Normal-ordered quantization: `z^α z̄^β ↦ (2h)^{(|α|+|β|)/2} a*^β a^α`.
///
/// Creation beyond the cutoff is dropped, so the result is the compression of the
/// exact operator to the truncated space.
pub fn wick_quantize<T: Quantizable>(f: &PolySymbol<T>, basis: &FockBasis, h: f64) -> Result<FockOperator> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveH(h));
    }
    if f.dim() != basis.modes() {
        return Err(Error::Dimension {
            expected: basis.modes(),
            got: f.dim(),
        });
    }
    if f.degree() > basis.n_max() {
        return Err(Error::DegreeExceedsCutoff {
            degree: f.degree(),
            n_max: basis.n_max(),
        });
    }
    let kind = T::zero(f.shape()).kind();
    let n = match kind {
        OpKind::Photon => basis.dim(),
        OpKind::Tensor { spin_dim } => basis.dim() * spin_dim,
    };
    let d = basis.modes();
    let mut trip = Vec::new();
    let mut buf = vec![0u16; d];
    for ((alpha, beta), coeff) in f.terms() {
        let m = alpha.iter().sum::<u32>() + beta.iter().sum::<u32>();
        let pref = (2.0 * h).powf(m as f64 / 2.0);
        'states: for (col, gamma) in basis.states().iter().enumerate() {
            let mut amp = pref;
            for j in 0..d {
                let g = gamma[j] as u32;
                if g < alpha[j] {
                    continue 'states;
                }
                let mid = g - alpha[j];
                let top = mid + beta[j];
                // a^α: √(g!/mid!), then a*^β: √(top!/mid!)
                for k in (mid + 1)..=g {
                    amp *= (k as f64).sqrt();
                }
                for k in (mid + 1)..=top {
                    amp *= (k as f64).sqrt();
                }
                buf[j] = top as u16;
            }
            if let Some(row) = basis.index_of(&buf) {
                coeff.push_entries(row, col, c(amp), &mut trip);
            }
        }
    }
    Ok(FockOperator::from_triplets(n, kind, trip))
}

/// Anti-Wick quantization, computed as `Op^wick(heat(F, h))`.
pub fn anti_wick_quantize<T: Quantizable>(f: &PolySymbol<T>, basis: &FockBasis, h: f64) -> Result<FockOperator> {
    wick_quantize(&f.heat(h), basis, h)
}
