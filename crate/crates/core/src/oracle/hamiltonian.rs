use crate::error::{Error, Result};
use crate::fock::{free_energies, segal_field, FockBasis, FockOperator, OpKind};
use crate::linalg::{c, SpinMatrix};
use crate::model::{Model, PhaseVector};
use num_complex::Complex64 as C64;

/// Which modes get a quantized Fock factor.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ModeSelection {
    /// Modes with a nonzero spin coupling; the rest are transported freely and analytically.
    #[default]
    Active,
    All,
    Explicit(Vec<usize>),
}

/// `H(h) = h dΓ(M_ω) ⊗ I + h H_int`, `H_int = Σ_{λ,m} (β_m + Φ_{S,h}(B_{m x_λ})) ⊗ σ_m^{[λ]}`,
/// restricted to the selected modes.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub basis: FockBasis,
    /// Global indices of the quantized modes, in basis order.
    pub modes: Vec<usize>,
    /// Global indices of the freely transported modes.
    pub free_modes: Vec<usize>,
    pub omegas: Vec<f64>,
    /// `Σ_j α_j ω_j` per photon basis state.
    pub photon_energies: Vec<f64>,
    pub h_int: FockOperator,
    pub h: f64,
    pub spin_dim: usize,
    /// Upper bound on `‖H_int‖` (maximum absolute row sum).
    pub int_norm: f64,
}

fn restrict(v: &PhaseVector, modes: &[usize]) -> PhaseVector {
    PhaseVector::from_slices(
        &modes.iter().map(|&j| v.q[j]).collect::<Vec<_>>(),
        &modes.iter().map(|&j| v.p[j]).collect::<Vec<_>>(),
    )
}

pub(crate) fn row_sum_bound(op: &FockOperator) -> f64 {
    let (off, _, vals) = op.mat.csr_data();
    (0..op.dim())
        .map(|r| vals[off[r]..off[r + 1]].iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Hamiltonian {
    pub fn build(model: &Model, n_max: usize, h: f64, selection: &ModeSelection) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::NonPositiveH(h));
        }
        let d = model.dim();
        let modes = match selection {
            ModeSelection::Active => model.active_modes(),
            ModeSelection::All => (0..d).collect(),
            ModeSelection::Explicit(m) => {
                let mut m = m.clone();
                m.sort_unstable();
                m.dedup();
                if let Some(&bad) = m.iter().find(|&&j| j >= d) {
                    return Err(Error::Index {
                        what: "mode",
                        value: bad,
                        lo: 0,
                        hi: d - 1,
                    });
                }
                m
            }
        };
        if modes.is_empty() {
            return Err(Error::Config(
                "no quantized modes selected (use ModeSelection::All for a decoupled model)".into(),
            ));
        }
        for j in model.active_modes() {
            if !modes.contains(&j) {
                return Err(Error::Config(format!("coupled mode {j} is not quantized")));
            }
        }
        let free_modes: Vec<usize> = (0..d).filter(|j| !modes.contains(j)).collect();
        let basis = FockBasis::new(modes.len(), n_max)?;
        let omegas: Vec<f64> = modes.iter().map(|&j| model.grid.mode_omega(j)).collect();
        let photon_energies = free_energies(&basis, &omegas);
        let spin_dim = model.spin_dim();
        let kind = OpKind::Tensor { spin_dim };

        let mut beta_part = SpinMatrix::zeros(spin_dim, spin_dim);
        let mut h_int = FockOperator::zero(basis.dim() * spin_dim, kind);
        for lam in 0..model.n_spins() {
            for m in 0..3 {
                let s = model.sigma(lam, m);
                beta_part += s * c(model.beta[m]);
                let b = restrict(model.b(lam, m), &modes);
                if b.norm() > 0.0 {
                    h_int = h_int.add(&segal_field(&basis, &b, h)?.tensor(s)?)?;
                }
            }
        }
        h_int = h_int.add(&FockOperator::spin_only(basis.dim(), &beta_part))?;
        let int_norm = row_sum_bound(&h_int);
        Ok(Self {
            basis,
            modes,
            free_modes,
            omegas,
            photon_energies,
            h_int,
            h,
            spin_dim,
            int_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim() * self.spin_dim
    }

    /// `Σ α_j ω_j` for every tensor index (spin index fastest).
    pub fn tensor_energies(&self) -> Vec<f64> {
        self.photon_energies
            .iter()
            .flat_map(|&e| std::iter::repeat(e).take(self.spin_dim))
            .collect()
    }

    /// Split of a global phase vector into quantized and free parts.
    pub fn split(&self, x: &PhaseVector) -> Result<(PhaseVector, PhaseVector)> {
        let d = self.modes.len() + self.free_modes.len();
        if x.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: x.dim(),
            });
        }
        Ok((restrict(x, &self.modes), restrict(x, &self.free_modes)))
    }

    /// `y = H(h) x`.
    pub fn apply_full(&self, x: &[C64], y: &mut [C64]) {
        self.h_int.apply(x, y);
        let n = self.spin_dim;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (*yi + x[i] * self.photon_energies[i / n]) * self.h;
        }
    }

    /// Sparse `H(h)` (photon part on the diagonal).
    pub fn full_operator(&self) -> Result<FockOperator> {
        let diag = FockOperator::from_triplets(
            self.dim(),
            self.h_int.kind,
            self.tensor_energies().into_iter().enumerate().map(|(i, e)| (i, i, c(e))),
        );
        Ok(diag.add(&self.h_int)?.scale(c(self.h)))
    }

    /// `⟨ψ, H(h) ψ⟩`.
    pub fn energy(&self, psi: &[C64]) -> f64 {
        let mut y = vec![c(0.0); psi.len()];
        self.apply_full(psi, &mut y);
        psi.iter().zip(&y).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }
}
