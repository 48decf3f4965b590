//! Discretized spin–photon model: mode grid, couplings, helicity, `ρ`, spin
//! operators, the interaction symbol and the quadratic form `Q_t`.

pub mod config;
pub mod grid;
pub mod phase;
pub mod qform;
pub mod spin;

pub use config::{CutoffConfig, Directions, FieldConfig, GridConfig, ModelConfig, SpinsConfig};
pub use grid::{frame_for, mode_index, Cutoff, ModeGrid, Vec3, COS, SIN};
pub use phase::{CouplingVector, PhaseVector};
pub use qform::{q_form, QuadFormQ};
pub use spin::{levi_civita, pauli, spin_family, spin_operator};

use crate::error::{Error, Result};
use crate::linalg::{c, SpinMatrix};
use serde::Serialize;
use std::f64::consts::PI;

/// Amplitude `√w χ(|k|) |k|^{1/2} (2π)^{-3/2}` of k-point `i`.
fn amplitude(grid: &ModeGrid, cutoff: &Cutoff, i: usize) -> f64 {
    let r = grid.omegas[i];
    grid.weights[i].sqrt() * cutoff.eval(r) * r.sqrt() * (2.0 * PI).powf(-1.5)
}

/// Projection of the magnetic coupling `B_{mx}` onto the real mode basis.
///
/// Per k-point the complex value `i A e^{−ik·x} (k̂ × e_m)` is split into a cos
/// slot carrying `p = A cos(k·x) c_a` and a sin slot carrying `q = A sin(k·x) c_a`.
pub fn coupling_b(grid: &ModeGrid, cutoff: &Cutoff, m: usize, x: &Vec3) -> Result<CouplingVector> {
    if m >= 3 {
        return Err(Error::Index {
            what: "axis",
            value: m,
            lo: 0,
            hi: 2,
        });
    }
    let mut v = PhaseVector::zeros(grid.dim());
    let em = Vec3::ith(m, 1.0);
    for (i, k) in grid.kpoints.iter().enumerate() {
        let amp = amplitude(grid, cutoff, i);
        if amp == 0.0 {
            continue;
        }
        let cvec = (k / k.norm()).cross(&em);
        let th = k.dot(x);
        for a in 0..2 {
            let ca = cvec.dot(grid.frame_vector(i, a));
            v.p[mode_index(i, COS, a)] = amp * th.cos() * ca;
            v.q[mode_index(i, SIN, a)] = amp * th.sin() * ca;
        }
    }
    Ok(v)
}

/// Spatial derivative `∂_{x_l} B_{mx}` (analytic).
pub fn coupling_b_grad(
    grid: &ModeGrid,
    cutoff: &Cutoff,
    m: usize,
    l: usize,
    x: &Vec3,
) -> Result<CouplingVector> {
    if m >= 3 || l >= 3 {
        return Err(Error::Index {
            what: "axis",
            value: m.max(l),
            lo: 0,
            hi: 2,
        });
    }
    let mut v = PhaseVector::zeros(grid.dim());
    let em = Vec3::ith(m, 1.0);
    for (i, k) in grid.kpoints.iter().enumerate() {
        let amp = amplitude(grid, cutoff, i);
        let cvec = (k / k.norm()).cross(&em);
        let th = k.dot(x);
        for a in 0..2 {
            let ca = cvec.dot(grid.frame_vector(i, a));
            v.p[mode_index(i, COS, a)] = -amp * th.sin() * k[l] * ca;
            v.q[mode_index(i, SIN, a)] = amp * th.cos() * k[l] * ca;
        }
    }
    Ok(v)
}

/// Helicity `J`: `k̂ × ·` on each transverse pair, exchanging the cos and sin slots.
///
/// In frame coordinates `(u₁, u₂) ↦ (−u₂, u₁)`. The slot exchange is what makes
/// `σ(E_{mx}, B_{ny}) = ∇ρ(x − y)·(e_m × e_n)` hold for the parity basis.
pub fn apply_helicity(grid: &ModeGrid, v: &PhaseVector) -> Result<PhaseVector> {
    if v.dim() != grid.dim() {
        return Err(Error::Dimension {
            expected: grid.dim(),
            got: v.dim(),
        });
    }
    let mut out = PhaseVector::zeros(grid.dim());
    for i in 0..grid.n_kpoints() {
        for (src, dst) in [(SIN, COS), (COS, SIN)] {
            let s0 = mode_index(i, src, 0);
            let s1 = mode_index(i, src, 1);
            let d0 = mode_index(i, dst, 0);
            let d1 = mode_index(i, dst, 1);
            out.q[d0] = -v.q[s1];
            out.q[d1] = v.q[s0];
            out.p[d0] = -v.p[s1];
            out.p[d1] = v.p[s0];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polarization {
    Plus,
    Minus,
}

/// `Π₊X = ½(X − J𝓕X)`, `Π₋X = ½(X + J𝓕X)`.
pub fn polarization_project(grid: &ModeGrid, sign: Polarization, x: &PhaseVector) -> Result<PhaseVector> {
    let jf = apply_helicity(grid, &x.fcal())?;
    let s = match sign {
        Polarization::Plus => -1.0,
        Polarization::Minus => 1.0,
    };
    let mut out = x.clone();
    out.axpy(s, &jf);
    Ok(out.scale(0.5))
}

/// Discrete `ρ(x) = (2π)^{-3} Σ w χ² cos(k·x)` and its gradient.
pub fn rho_discrete(grid: &ModeGrid, cutoff: &Cutoff, x: &Vec3) -> (f64, Vec3) {
    let mut val = 0.0;
    let mut grad = Vec3::zeros();
    let pref = (2.0 * PI).powi(-3);
    for (i, k) in grid.kpoints.iter().enumerate() {
        let w = grid.weights[i] * cutoff.eval(grid.omegas[i]).powi(2) * pref;
        let th = k.dot(x);
        val += w * th.cos();
        grad -= k * (w * th.sin());
    }
    (val, grad)
}

/// The assembled model: configuration, grid, cutoff, cached couplings and spin operators.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub grid: ModeGrid,
    pub cutoff: Cutoff,
    pub positions: Vec<Vec3>,
    pub beta: Vec3,
    b: Vec<[CouplingVector; 3]>,
    sigma: Vec<[SpinMatrix; 3]>,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let cutoff = Cutoff::from_config(&config.cutoff)?;
        let grid = ModeGrid::build(&config, &cutoff)?;
        Self::with_grid(config, grid, cutoff)
    }

    /// Model on an explicit grid with an explicit cutoff profile.
    pub fn with_grid(config: ModelConfig, grid: ModeGrid, cutoff: Cutoff) -> Result<Self> {
        config.validate()?;
        let positions: Vec<Vec3> = config
            .spins
            .positions
            .iter()
            .map(|p| Vec3::new(p[0], p[1], p[2]))
            .collect();
        let beta = Vec3::from(config.field.beta);
        let b = positions
            .iter()
            .map(|x| {
                Ok([
                    coupling_b(&grid, &cutoff, 0, x)?,
                    coupling_b(&grid, &cutoff, 1, x)?,
                    coupling_b(&grid, &cutoff, 2, x)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        let sigma = spin_family(config.spins.count);
        Ok(Self {
            config,
            grid,
            cutoff,
            positions,
            beta,
            b,
            sigma,
        })
    }

    /// Same model with every coupling switched off (`χ ≡ 0`).
    pub fn decoupled(&self) -> Result<Self> {
        Self::with_grid(self.config.clone(), self.grid.clone(), Cutoff::custom("zero", |_| 0.0))
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn n_spins(&self) -> usize {
        self.positions.len()
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_spins()
    }

    /// Cached `B_{m x_λ}`.
    pub fn b(&self, lambda: usize, m: usize) -> &CouplingVector {
        &self.b[lambda][m]
    }

    /// Cached `σ_m^{[λ]}`.
    pub fn sigma(&self, lambda: usize, m: usize) -> &SpinMatrix {
        &self.sigma[lambda][m]
    }

    pub fn coupling_b(&self, m: usize, x: &Vec3) -> Result<CouplingVector> {
        coupling_b(&self.grid, &self.cutoff, m, x)
    }

    /// `E_{mx} = J B_{mx}`.
    pub fn coupling_e(&self, m: usize, x: &Vec3) -> Result<CouplingVector> {
        apply_helicity(&self.grid, &self.coupling_b(m, x)?)
    }

    /// Polarized electric coupling `𝓕 B_{mx}` (symbol `−E_m(x, J𝓕X)`).
    pub fn coupling_e_pol(&self, m: usize, x: &Vec3) -> Result<CouplingVector> {
        Ok(self.coupling_b(m, x)?.fcal())
    }

    /// `(curl E)_m` at `x` as a coupling vector: `Σ ε_{mln} ∂_l E_{nx}`.
    pub fn curl_coupling_e(&self, m: usize, x: &Vec3) -> Result<CouplingVector> {
        let mut out = PhaseVector::zeros(self.dim());
        for l in 0..3 {
            for n in 0..3 {
                let e = levi_civita(m, l, n);
                if e != 0.0 {
                    let g = coupling_b_grad(&self.grid, &self.cutoff, n, l, x)?;
                    out.axpy(e, &apply_helicity(&self.grid, &g)?);
                }
            }
        }
        Ok(out)
    }

    pub fn rho(&self, x: &Vec3) -> (f64, Vec3) {
        rho_discrete(&self.grid, &self.cutoff, x)
    }

    fn check_dim(&self, x: &PhaseVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// `H_int(X) = Σ_{λ,m} (β_m + B_{m x_λ}·X) σ_m^{[λ]}`.
    pub fn h_int_symbol(&self, x: &PhaseVector) -> Result<SpinMatrix> {
        self.check_dim(x)?;
        let n = self.spin_dim();
        let mut h = SpinMatrix::zeros(n, n);
        for l in 0..self.n_spins() {
            for m in 0..3 {
                h += self.sigma(l, m) * c(self.beta[m] + self.b(l, m).dot(x));
            }
        }
        Ok(h)
    }

    /// Constant differential `dH_int(V) = Σ (B_{m x_λ}·V) σ_m^{[λ]}`.
    pub fn dh_int(&self, v: &PhaseVector) -> Result<SpinMatrix> {
        self.check_dim(v)?;
        let n = self.spin_dim();
        let mut h = SpinMatrix::zeros(n, n);
        for l in 0..self.n_spins() {
            for m in 0..3 {
                h += self.sigma(l, m) * c(self.b(l, m).dot(v));
            }
        }
        Ok(h)
    }

    /// Modes on which any spin coupling has a nonzero component.
    pub fn active_modes(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&j| {
                self.b
                    .iter()
                    .flat_map(|bl| bl.iter())
                    .any(|b| b.q[j] != 0.0 || b.p[j] != 0.0)
            })
            .collect()
    }

    pub fn q_form(&self, t: f64) -> QuadFormQ {
        q_form(self, t)
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            version: 1,
            config: self.config.clone(),
            cutoff: self.cutoff.name(),
            grid: self.grid.clone(),
            mode_layout: "j = 4*kpoint + 2*parity(cos=0,sin=1) + polarization".into(),
            hs_normalization: "unnormalized trace pairing Tr(AB*), |sigma|^2 = 2^N".into(),
            couplings_b: self
                .b
                .iter()
                .map(|bl| bl.iter().map(|v| v.to_flat()).collect())
                .collect(),
            rho_at_zero: self.rho(&Vec3::zeros()).0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelDump {
    pub version: u32,
    pub config: ModelConfig,
    pub cutoff: String,
    pub grid: ModeGrid,
    pub mode_layout: String,
    pub hs_normalization: String,
    /// `[λ][m]` flat `[q; p]` vectors.
    pub couplings_b: Vec<Vec<Vec<f64>>>,
    pub rho_at_zero: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::flow::chi_flow;
    use crate::linalg::{frobenius, hermiticity_defect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_grid() -> ModeGrid {
        ModeGrid::from_points(vec![Vec3::new(0.0, 0.0, 1.0)], vec![1.0]).unwrap()
    }

    fn octa_model(seed_positions: &[[f64; 3]]) -> Model {
        let mut c = ModelConfig::minimal([0.2, -0.1, 0.7]);
        c.spins.count = seed_positions.len();
        c.spins.positions = seed_positions.to_vec();
        c.grid.radial_nodes = 2;
        c.grid.kmax = Some(3.0);
        c.grid.directions = Directions::Named("octahedral".into());
        Model::new(c).unwrap()
    }

    fn random_phase(rng: &mut ChaCha8Rng, d: usize) -> PhaseVector {
        let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        PhaseVector::from_slices(&q, &p)
    }

    #[test]
    fn coupling_on_unit_grid_matches_hand_value() {
        let g = unit_grid();
        let b1 = coupling_b(&g, &Cutoff::unit(), 0, &Vec3::zeros()).unwrap();
        // k̂ × e₁ = e₂ = ε₂: only the p part of the (cos, ε₂) slot survives
        let expect = (2.0 * PI).powf(-1.5);
        assert!((b1.p[mode_index(0, COS, 1)] - expect).abs() < 1e-15);
        let mut rest = b1.clone();
        rest.p[mode_index(0, COS, 1)] = 0.0;
        assert_eq!(rest.norm(), 0.0);
        let b3 = coupling_b(&g, &Cutoff::unit(), 2, &Vec3::zeros()).unwrap();
        assert_eq!(b3.norm(), 0.0);
    }

    #[test]
    fn helicity_squares_to_minus_identity_and_is_orthogonal() {
        let g = octa_model(&[[0.0; 3]]).grid;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let v = random_phase(&mut rng, g.dim());
            let jv = apply_helicity(&g, &v).unwrap();
            let jjv = apply_helicity(&g, &jv).unwrap();
            assert!((&jjv + &v).norm() < 1e-14);
            assert!((jv.norm() - v.norm()).abs() < 1e-13);
            // J commutes with 𝓕 and with χ_t
            let a = apply_helicity(&g, &v.fcal()).unwrap();
            assert!((&a - &jv.fcal()).norm() < 1e-14);
            let b = apply_helicity(&g, &chi_flow(&g, 0.7, &v)).unwrap();
            assert!((&b - &chi_flow(&g, 0.7, &jv)).norm() < 1e-13);
        }
        assert_eq!(apply_helicity(&g, &PhaseVector::zeros(g.dim())).unwrap().norm(), 0.0);
        assert!(apply_helicity(&g, &PhaseVector::zeros(3)).is_err());
    }

    #[test]
    fn symplectic_seed_identity() {
        let model = octa_model(&[[0.0; 3]]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let x = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let y = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (_, grad) = model.rho(&(x - y));
            for m in 0..3 {
                let e = model.coupling_e(m, &x).unwrap();
                for n in 0..3 {
                    let b = model.coupling_b(n, &y).unwrap();
                    let em = Vec3::ith(m, 1.0);
                    let en = Vec3::ith(n, 1.0);
                    let rhs = grad.dot(&em.cross(&en));
                    assert!((e.sigma(&b) - rhs).abs() < 1e-10);
                    let bx = model.coupling_b(m, &x).unwrap();
                    assert!(bx.sigma(&b).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rho_on_unit_grid() {
        let g = unit_grid();
        let x = Vec3::new(0.3, -0.2, 0.9);
        let (v, grad) = rho_discrete(&g, &Cutoff::unit(), &x);
        let pref = (2.0 * PI).powi(-3);
        assert!((v - pref * 0.9f64.cos()).abs() < 1e-15);
        assert!((grad - Vec3::new(0.0, 0.0, -pref * 0.9f64.sin())).norm() < 1e-15);
        let (_, g0) = rho_discrete(&g, &Cutoff::unit(), &Vec3::zeros());
        assert_eq!(g0.norm(), 0.0);
    }

    #[test]
    fn polarization_projectors() {
        let g = octa_model(&[[0.0; 3]]).grid;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_phase(&mut rng, g.dim());
        let p = polarization_project(&g, Polarization::Plus, &x).unwrap();
        let pp = polarization_project(&g, Polarization::Plus, &p).unwrap();
        let m = polarization_project(&g, Polarization::Minus, &x).unwrap();
        assert!((&pp - &p).norm() < 1e-14);
        assert!((&(&p + &m) - &x).norm() < 1e-14);
        assert!(p.dot(&m).abs() < 1e-14);
        // Π₋ annihilates the range of Π₊, where JX = 𝓕X
        let jp = apply_helicity(&g, &p).unwrap();
        assert!((&jp - &p.fcal()).norm() < 1e-14);
        assert!(polarization_project(&g, Polarization::Minus, &p).unwrap().norm() < 1e-14);
    }

    #[test]
    fn h_int_is_hermitian_and_affine() {
        let model = octa_model(&[[0.0; 3], [0.4, 0.1, -0.3]]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_phase(&mut rng, model.dim());
        let y = random_phase(&mut rng, model.dim());
        let v = random_phase(&mut rng, model.dim());
        let hx = model.h_int_symbol(&x).unwrap();
        assert!(hermiticity_defect(&hx) < 1e-14);
        let dx = model.h_int_symbol(&(&x + &v)).unwrap() - &hx;
        let dy = model.h_int_symbol(&(&y + &v)).unwrap() - model.h_int_symbol(&y).unwrap();
        assert!(frobenius(&(&dx - &dy)) < 1e-13);
        assert!(frobenius(&(&dx - model.dh_int(&v).unwrap())) < 1e-13);
    }

    #[test]
    fn h_int_at_origin_single_spin() {
        let model = Model::new(ModelConfig::minimal([0.0, 0.0, 0.8])).unwrap();
        let h = model.h_int_symbol(&PhaseVector::zeros(model.dim())).unwrap();
        let eig = h.symmetric_eigen().eigenvalues;
        let mut e: Vec<f64> = eig.iter().cloned().collect();
        e.sort_by(f64::total_cmp);
        assert!((e[0] + 0.8).abs() < 1e-14 && (e[1] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn transversality_and_divergence() {
        let model = octa_model(&[[0.0; 3]]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = random_phase(&mut rng, model.dim());
        let x = Vec3::new(0.2, 0.5, -0.4);
        let div: f64 = (0..3)
            .map(|m| {
                coupling_b_grad(&model.grid, &model.cutoff, m, m, &x)
                    .unwrap()
                    .dot(&z)
            })
            .sum();
        assert!(div.abs() < 1e-13);
        // the stored frame components rebuild a vector parallel to k̂ × e_m
        let g = &model.grid;
        for m in 0..3 {
            let b = model.coupling_b(m, &x).unwrap();
            for i in 0..g.n_kpoints() {
                let kh = g.kpoints[i] / g.omegas[i];
                let dir = kh.cross(&Vec3::ith(m, 1.0));
                let v = g.frame_vector(i, 0) * b.p[mode_index(i, COS, 0)]
                    + g.frame_vector(i, 1) * b.p[mode_index(i, COS, 1)];
                assert!(v.dot(&kh).abs() < 1e-15);
                assert!(v.cross(&dir).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn q_form_properties() {
        let model = Model::new(ModelConfig::minimal([0.0, 0.0, 1.0])).unwrap();
        let q0 = model.q_form(0.0);
        assert_eq!(q0.trace, 0.0);
        let q1 = model.q_form(0.5);
        let q2 = model.q_form(1.0);
        assert!(q1.min_eigenvalue() > -1e-12);
        assert!((&q2.a_q - &q1.a_q).symmetric_eigen().eigenvalues.min() > -1e-12);
        // trace identity: 2^N |t| ∫ Σ |χ_{−s} B|² ds, and |χ_{−s}B| = |B|
        let nb: f64 = (0..3).map(|m| model.b(0, m).dot(model.b(0, m))).sum();
        assert!((q2.trace - 2.0 * nb).abs() < 1e-10 * q2.trace);
        let ev: f64 = q2.a_q.clone().symmetric_eigen().eigenvalues.sum();
        assert!((ev - q2.trace).abs() < 1e-10 * q2.trace);
        let qm = model.q_form(-1.0);
        assert!((qm.trace - q2.trace).abs() < 1e-10 * q2.trace);
    }
}
