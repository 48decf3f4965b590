use crate::error::{Error, Result};
use crate::model::{Model, PhaseVector};

/// Orthonormal complex basis `u_k` (real pairs `u_k, 𝓕u_k`) of the smallest
/// `𝓕`- and `χ_t`-invariant subspace containing every spin coupling vector.
///
/// It is spanned by the frequency-shell projections `P_ω B_{m x_λ}`; every
/// phase-space derivative the hierarchy needs points into it.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    pub vectors: Vec<PhaseVector>,
    dim: usize,
}

impl ReducedBasis {
    pub fn build(model: &Model) -> Self {
        let d = model.dim();
        let mut candidates = Vec::new();
        for (_, modes) in model.grid.frequency_shells() {
            for lam in 0..model.n_spins() {
                for m in 0..3 {
                    let b = model.b(lam, m);
                    let mut v = PhaseVector::zeros(d);
                    for &j in &modes {
                        v.q[j] = b.q[j];
                        v.p[j] = b.p[j];
                    }
                    candidates.push(v);
                }
            }
        }
        Self::from_candidates(d, &candidates)
    }

    /// Complex Gram–Schmidt: each accepted vector is orthogonal to all earlier `u_l` and `𝓕u_l`.
    pub fn from_candidates(d: usize, candidates: &[PhaseVector]) -> Self {
        let scale = candidates.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut vectors: Vec<PhaseVector> = Vec::new();
        for w in candidates {
            let mut v = w.clone();
            for _ in 0..2 {
                for u in &vectors {
                    let fu = u.fcal();
                    let (a, b) = (v.dot(u), v.dot(&fu));
                    v.axpy(-a, u);
                    v.axpy(-b, &fu);
                }
            }
            let n = v.norm();
            if n > 1e-10 * scale.max(1e-300) {
                vectors.push(v.scale(1.0 / n));
            }
        }
        Self { vectors, dim: d }
    }

    /// Number of complex coordinates.
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Real directions `e_{2k} = u_k`, `e_{2k+1} = 𝓕u_k`.
    pub fn real_directions(&self) -> Vec<PhaseVector> {
        self.vectors.iter().flat_map(|u| [u.clone(), u.fcal()]).collect()
    }

    /// `(v·u_k, v·𝓕u_k)` for each `k`.
    pub fn coords(&self, v: &PhaseVector) -> Result<Vec<(f64, f64)>> {
        if v.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: v.dim(),
            });
        }
        Ok(self.vectors.iter().map(|u| (v.dot(u), v.dot(&u.fcal()))).collect())
    }

    /// Largest deviation of the real Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let e = self.real_directions();
        let mut worst = 0.0f64;
        for (i, a) in e.iter().enumerate() {
            for (j, b) in e.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - want).abs());
            }
        }
        worst
    }

    /// Component of `v` outside the subspace.
    pub fn residual(&self, v: &PhaseVector) -> PhaseVector {
        let mut r = v.clone();
        for e in self.real_directions() {
            r.axpy(-v.dot(&e), &e);
        }
        r
    }
}
