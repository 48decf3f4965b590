use super::basis::FockBasis;
use crate::error::{Error, Result};
use crate::linalg::{c, SpinMatrix};
use crate::model::PhaseVector;
use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Default size cap for dense conversions.
pub const DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OpKind {
    /// Acts on the photon factor only.
    Photon,
    /// Acts on photon ⊗ spin, spin index fastest.
    Tensor { spin_dim: usize },
}

/// Sparse operator on the truncated Fock space or on Fock ⊗ spin.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub mat: CsrMatrix<C64>,
    pub kind: OpKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

impl FockOperator {
    pub fn photon(mat: CsrMatrix<C64>) -> Self {
        Self {
            mat,
            kind: OpKind::Photon,
        }
    }

    pub fn from_triplets(n: usize, kind: OpKind, trip: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut coo = CooMatrix::new(n, n);
        for (i, j, v) in trip {
            if v != c(0.0) {
                coo.push(i, j, v);
            }
        }
        Self {
            mat: CsrMatrix::from(&coo),
            kind,
        }
    }

    pub fn identity(n: usize, kind: OpKind) -> Self {
        Self {
            mat: CsrMatrix::identity(n),
            kind,
        }
    }

    pub fn zero(n: usize, kind: OpKind) -> Self {
        Self {
            mat: CsrMatrix::zeros(n, n),
            kind,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let (off, cols, vals) = self.mat.csr_data();
        for r in 0..self.dim() {
            let mut acc = c(0.0);
            for k in off[r]..off[r + 1] {
                acc += vals[k] * x[cols[k]];
            }
            y[r] = acc;
        }
    }

    pub fn apply_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut y = DVector::zeros(self.dim());
        self.apply(x.as_slice(), y.as_mut_slice());
        y
    }

    /// `⟨ψ, A φ⟩` with the inner product antilinear in the first slot of this call.
    pub fn matrix_element(&self, psi: &[C64], phi: &[C64]) -> C64 {
        let (off, cols, vals) = self.mat.csr_data();
        let mut acc = c(0.0);
        for r in 0..self.dim() {
            let mut row = c(0.0);
            for k in off[r]..off[r + 1] {
                row += vals[k] * phi[cols[k]];
            }
            acc += psi[r].conj() * row;
        }
        acc
    }

    pub fn adjoint(&self) -> Self {
        let mut t = self.mat.transpose();
        for v in t.values_mut() {
            *v = v.conj();
        }
        Self {
            mat: t,
            kind: self.kind,
        }
    }

    fn check_kind(&self, other: &Self) -> Result<()> {
        if self.kind != other.kind || self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_kind(other)?;
        Ok(Self {
            mat: &self.mat * &other.mat,
            kind: self.kind,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_kind(other)?;
        Ok(Self {
            mat: &self.mat + &other.mat,
            kind: self.kind,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_kind(other)?;
        Ok(Self {
            mat: &self.mat - &other.mat,
            kind: self.kind,
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.mat.clone();
        for v in m.values_mut() {
            *v *= s;
        }
        Self {
            mat: m,
            kind: self.kind,
        }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// `self ⊗ s` for a photon-only operator.
    pub fn tensor(&self, s: &SpinMatrix) -> Result<Self> {
        if self.kind != OpKind::Photon {
            return Err(Error::Observable("tensor() needs a photon-only operator".into()));
        }
        let n = s.nrows();
        let trip = self.mat.triplet_iter().flat_map(|(i, j, v)| {
            let v = *v;
            (0..n).flat_map(move |a| (0..n).map(move |b| (i * n + a, j * n + b, v * s[(a, b)])))
        });
        Ok(Self::from_triplets(
            self.dim() * n,
            OpKind::Tensor { spin_dim: n },
            trip.collect::<Vec<_>>(),
        ))
    }

    /// `I ⊗ s` on a photon space of dimension `photon_dim`.
    pub fn spin_only(photon_dim: usize, s: &SpinMatrix) -> Self {
        Self::identity(photon_dim, OpKind::Photon)
            .tensor(s)
            .expect("photon identity")
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        self.to_dense_capped(DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DMatrix<C64>> {
        if self.dim() > cap {
            return Err(Error::Config(format!(
                "dense conversion of dimension {} exceeds cap {cap}",
                self.dim()
            )));
        }
        let mut d = DMatrix::zeros(self.dim(), self.dim());
        for (i, j, v) in self.mat.triplet_iter() {
            d[(i, j)] += *v;
        }
        Ok(d)
    }

    /// Largest entry of `A − A*`.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.mat - &self.adjoint().mat;
        diff.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, [f64; 2])> {
        self.mat
            .triplet_iter()
            .map(|(i, j, v)| (i, j, [v.re, v.im]))
            .collect()
    }
}

/// `a(e_j)` or `a*(e_j)`; creation beyond the cutoff is dropped.
pub fn ladder(basis: &FockBasis, j: usize, kind: Ladder) -> Result<FockOperator> {
    if j >= basis.modes() {
        return Err(Error::Index {
            what: "mode",
            value: j,
            lo: 0,
            hi: basis.modes() - 1,
        });
    }
    let mut trip = Vec::new();
    let mut buf = vec![0u16; basis.modes()];
    for (col, alpha) in basis.states().iter().enumerate() {
        buf.copy_from_slice(alpha);
        match kind {
            Ladder::Annihilate => {
                if alpha[j] == 0 {
                    continue;
                }
                buf[j] -= 1;
                let row = basis.index_of(&buf).expect("lower state exists");
                trip.push((row, col, c((alpha[j] as f64).sqrt())));
            }
            Ladder::Create => {
                buf[j] += 1;
                if let Some(row) = basis.index_of(&buf) {
                    trip.push((row, col, c((alpha[j] as f64 + 1.0).sqrt())));
                }
            }
        }
    }
    Ok(FockOperator::from_triplets(basis.dim(), OpKind::Photon, trip))
}

fn check_modes(basis: &FockBasis, v: &PhaseVector) -> Result<()> {
    if v.dim() != basis.modes() {
        return Err(Error::Dimension {
            expected: basis.modes(),
            got: v.dim(),
        });
    }
    Ok(())
}

/// Segal field `Φ_{S,h}(V) = √h Φ_S(V)` with
/// `Φ_S(V) = 2^{-1/2} Σ_j [(a_j − i b_j) a(e_j) + (a_j + i b_j) a*(e_j)]` for `V = (a, b)`.
///
/// This normalization makes the Wick symbol of `Φ_S(V)` equal to `h^{-1/2} V·X`.
pub fn segal_field(basis: &FockBasis, v: &PhaseVector, h: f64) -> Result<FockOperator> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveH(h));
    }
    check_modes(basis, v)?;
    let s = (h / 2.0).sqrt();
    let mut trip = Vec::new();
    let mut buf = vec![0u16; basis.modes()];
    for (col, alpha) in basis.states().iter().enumerate() {
        for j in 0..basis.modes() {
            let (a, b) = (v.q[j], v.p[j]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            if alpha[j] > 0 {
                buf.copy_from_slice(alpha);
                buf[j] -= 1;
                let row = basis.index_of(&buf).expect("lower state exists");
                trip.push((row, col, C64::new(a, -b) * (s * (alpha[j] as f64).sqrt())));
            }
            buf.copy_from_slice(alpha);
            buf[j] += 1;
            if let Some(row) = basis.index_of(&buf) {
                trip.push((row, col, C64::new(a, b) * (s * (alpha[j] as f64 + 1.0).sqrt())));
            }
        }
    }
    Ok(FockOperator::from_triplets(basis.dim(), OpKind::Photon, trip))
}

/// `dΓ(T) = Σ_{jk} T_{jk} a*(e_j) a(e_k)` for real symmetric `T`.
pub fn dgamma(basis: &FockBasis, t: &DMatrix<f64>) -> Result<FockOperator> {
    let d = basis.modes();
    if t.nrows() != d || t.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: t.nrows(),
        });
    }
    let asym = (t - t.transpose()).abs().max();
    if asym > 1e-12 * t.abs().max().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut trip = Vec::new();
    let mut buf = vec![0u16; d];
    for (col, alpha) in basis.states().iter().enumerate() {
        for k in 0..d {
            if alpha[k] == 0 {
                continue;
            }
            for j in 0..d {
                let tjk = t[(j, k)];
                if tjk == 0.0 {
                    continue;
                }
                buf.copy_from_slice(alpha);
                buf[k] -= 1;
                let after_a = (alpha[k] as f64).sqrt();
                buf[j] += 1;
                let after_c = (buf[j] as f64).sqrt();
                let row = basis.index_of(&buf).expect("number conserving");
                trip.push((row, col, c(tjk * after_a * after_c)));
            }
        }
    }
    Ok(FockOperator::from_triplets(basis.dim(), OpKind::Photon, trip))
}

/// Number operator `N = dΓ(I)`.
pub fn number_operator(basis: &FockBasis) -> FockOperator {
    FockOperator::from_triplets(
        basis.dim(),
        OpKind::Photon,
        (0..basis.dim()).map(|i| (i, i, c(basis.total(i) as f64))),
    )
}

/// Free energies `Σ_j α_j ω_j` per basis state.
pub fn free_energies(basis: &FockBasis, omegas: &[f64]) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|a| a.iter().zip(omegas).map(|(&n, w)| n as f64 * w).sum())
        .collect()
}

/// `Γ(χ_t) = exp(−i t dΓ(M_ω))`, diagonal in the occupation basis.
pub fn gamma_free(basis: &FockBasis, omegas: &[f64], t: f64) -> Result<FockOperator> {
    if omegas.len() != basis.modes() {
        return Err(Error::Dimension {
            expected: basis.modes(),
            got: omegas.len(),
        });
    }
    let e = free_energies(basis, omegas);
    Ok(FockOperator::from_triplets(
        basis.dim(),
        OpKind::Photon,
        e.iter().enumerate().map(|(i, &en)| (i, i, C64::from_polar(1.0, -t * en))),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorDump {
    pub basis: super::basis::BasisDump,
    pub kind: OpKind,
    /// `(row, col, [re, im])`
    pub triplets: Vec<(usize, usize, [f64; 2])>,
}

pub fn dump_operator(basis: &FockBasis, op: &FockOperator) -> OperatorDump {
    OperatorDump {
        basis: basis.dump(),
        kind: op.kind,
        triplets: op.triplets(),
    }
}
