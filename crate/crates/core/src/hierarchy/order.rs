use super::flow::{chi_flow, FlowCache};
use super::jet::{zbvar, zvar, JetSpace};
use super::propagator::{mat_from, propagator_g};
use super::reduced::ReducedBasis;
use crate::error::{Error, Result};
use crate::linalg::{c, SpinMatrix, I};
use crate::model::{Model, PhaseVector};
use crate::ode::{integrate, no_post, OdeLog, OdeOptions};
use crate::oracle::{LinearObservable, ObservableSpec};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Taylor jets of the co-moving coefficients `a_j(t, Y)` around `Y_0 = χ_t X`,
/// in the reduced coordinates `z_k`, with `A^[j](t, X) = a_j(t, χ_t X)`.
#[derive(Debug, Clone)]
pub struct JetSolution {
    pub t: f64,
    pub y0: PhaseVector,
    pub space: JetSpace,
    pub basis: ReducedBasis,
    /// `orders[j]` holds the coefficients up to degree `M − j`.
    pub orders: Vec<Vec<SpinMatrix>>,
    pub log: OdeLog,
    flow: FlowCache,
}

impl JetSolution {
    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn value(&self, j: usize) -> &SpinMatrix {
        &self.orders[j][0]
    }

    /// Derivative of `a_j(t, ·)` at `Y_0` along `w` (its component in the reduced subspace).
    pub fn derivative_y(&self, j: usize, w: &PhaseVector) -> Result<SpinMatrix> {
        let a = &self.orders[j];
        let n = a[0].nrows();
        let mut out = SpinMatrix::zeros(n, n);
        if j >= self.max_order() {
            return Err(Error::Missing(format!("derivative of order {j} needs jets to order {}", j + 1)));
        }
        for (k, (wq, wp)) in self.basis.coords(w)?.into_iter().enumerate() {
            let dz = C64::new(wq, wp);
            let iz = self.space.up(0, zvar(k)).expect("degree-1 monomial");
            let izb = self.space.up(0, zbvar(k)).expect("degree-1 monomial");
            out += &a[iz] * dz + &a[izb] * dz.conj();
        }
        Ok(out)
    }

    /// Derivative of `A^[j](t, ·)` at `X` along `v`, i.e. of `a_j` along `χ_t v`.
    pub fn derivative_x(&self, j: usize, v: &PhaseVector) -> Result<SpinMatrix> {
        self.derivative_y(j, &self.flow.apply(v))
    }
}

fn check_observable(obs: &LinearObservable) -> Result<()> {
    if obs.number != 0.0 {
        return Err(Error::Observable(
            "the number operator is quadratic in the field; use number_rate or a linear observable".into(),
        ));
    }
    Ok(())
}

/// Integrates the co-moving recursion for orders `0..=m_max` at `(t, X)`.
///
/// With `H̃_s(Y) = H_int(χ_{−s} Y)` affine, the per-order equations are
/// `∂_s a_j = i[H̃_s, a_j] + Φ_{j−1}`, `Φ = 2i Σ_k (∂_{z_k} H̃ ∂_{z̄_k} a − ∂_{z_k} a ∂_{z̄_k} H̃)`,
/// closed on the reduced subspace, so truncating `a_j` at degree `M − j` is exact.
pub fn solve_jets(
    model: &Model,
    basis: &ReducedBasis,
    obs: &LinearObservable,
    t: f64,
    x: &PhaseVector,
    m_max: usize,
    opts: &OdeOptions,
) -> Result<JetSolution> {
    check_observable(obs)?;
    let d = model.dim();
    if x.dim() != d {
        return Err(Error::Dimension { expected: d, got: x.dim() });
    }
    let n = model.spin_dim();
    let r = basis.rank();
    let space = JetSpace::new(r, m_max);
    let y0 = chi_flow(&model.grid, t, x);
    let lens: Vec<usize> = (0..=m_max).map(|j| space.len(m_max - j)).collect();
    let offsets: Vec<usize> = lens
        .iter()
        .scan(0, |acc, &l| {
            let o = *acc;
            *acc += l;
            Some(o)
        })
        .collect();
    let total: usize = lens.iter().sum();
    let nn = n * n;

    // initial data: a_0(0, Y) = S_A + Σ (V_k·Y) M_k expanded around Y_0
    let mut a0 = vec![SpinMatrix::zeros(n, n); lens[0]];
    a0[0] = obs.constant.clone();
    for (v, mk) in &obs.fields {
        a0[0] += mk * c(v.dot(&y0));
        if m_max >= 1 {
            for (k, (vq, vp)) in basis.coords(v)?.into_iter().enumerate() {
                let cz = C64::new(0.5 * vq, -0.5 * vp);
                a0[space.up(0, zvar(k)).unwrap()] += mk * cz;
                a0[space.up(0, zbvar(k)).unwrap()] += mk * cz.conj();
            }
        }
    }
    let mut state = vec![C64::new(0.0, 0.0); total * nn];
    for (i, m) in a0.iter().enumerate() {
        state[i * nn..(i + 1) * nn].copy_from_slice(m.as_slice());
    }

    let couplings: Vec<(PhaseVector, &SpinMatrix)> = (0..model.n_spins())
        .flat_map(|l| (0..3).map(move |m| (l, m)))
        .map(|(l, m)| (model.b(l, m).clone(), model.sigma(l, m)))
        .collect();
    let beta_part: SpinMatrix = (0..model.n_spins())
        .flat_map(|l| (0..3).map(move |m| (l, m)))
        .fold(SpinMatrix::zeros(n, n), |acc, (l, m)| acc + model.sigma(l, m) * c(model.beta[m]));
    let dirs: Vec<(PhaseVector, PhaseVector)> = basis.vectors.iter().map(|u| (u.clone(), u.fcal())).collect();
    let grid = &model.grid;

    let rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
        // H̃_s(Y) = H_int(χ_{−s} Y): coupling vectors transported by χ_s
        let flow = FlowCache::new(grid, s);
        let mut h0 = beta_part.clone();
        let mut lz = vec![SpinMatrix::zeros(n, n); r];
        let mut lzb = vec![SpinMatrix::zeros(n, n); r];
        for (b, sig) in &couplings {
            let bs = flow.apply(b);
            h0 += *sig * c(bs.dot(&y0));
            for k in 0..r {
                let (cq, cp) = (bs.dot(&dirs[k].0), bs.dot(&dirs[k].1));
                lz[k] += *sig * C64::new(0.5 * cq, -0.5 * cp);
                lzb[k] += *sig * C64::new(0.5 * cq, 0.5 * cp);
            }
        }
        let jets: Vec<Vec<SpinMatrix>> = (0..=m_max)
            .map(|j| (0..lens[j]).map(|i| mat_from(&y[(offsets[j] + i) * nn..], n)).collect())
            .collect();
        for j in 0..=m_max {
            let a = &jets[j];
            let mut out: Vec<SpinMatrix> = a.iter().map(|ai| (&h0 * ai - ai * &h0) * I).collect();
            // the linear part of H̃ raises degree by one
            let mut lin = vec![SpinMatrix::zeros(n, n); lens[j]];
            for k in 0..r {
                space.add_linear_product(&mut lin, a, zvar(k), &lz[k], true);
                space.add_linear_product(&mut lin, a, zbvar(k), &lzb[k], true);
                let neg_lz = -&lz[k];
                let neg_lzb = -&lzb[k];
                space.add_linear_product(&mut lin, a, zvar(k), &neg_lz, false);
                space.add_linear_product(&mut lin, a, zbvar(k), &neg_lzb, false);
            }
            if j >= 1 {
                let prev = &jets[j - 1];
                let deg = m_max - j + 1;
                for k in 0..r {
                    let dzb = space.deriv(prev, deg, zbvar(k));
                    let dz = space.deriv(prev, deg, zvar(k));
                    for i in 0..lens[j] {
                        // Φ / i, restored by the common factor below
                        lin[i] += (&lz[k] * &dzb[i] - &dz[i] * &lzb[k]) * c(2.0);
                    }
                }
            }
            for (o, l) in out.iter_mut().zip(&lin) {
                *o += l * I;
            }
            for (i, o) in out.iter().enumerate() {
                dy[(offsets[j] + i) * nn..(offsets[j] + i + 1) * nn].copy_from_slice(o.as_slice());
            }
        }
    };
    let (yt, log) = integrate(rhs, no_post, 0.0, t, &state, opts)?;
    let orders = (0..=m_max)
        .map(|j| (0..lens[j]).map(|i| mat_from(&yt[(offsets[j] + i) * nn..], n)).collect())
        .collect();
    Ok(JetSolution {
        t,
        y0,
        space,
        basis: basis.clone(),
        orders,
        log,
        flow: FlowCache::new(&model.grid, t),
    })
}

/// `A^[0](t, X) = Σ_k (V_k·χ_t X) G M_k G* + G S_A G*`, with `G = G(t, 0, X)`.
pub fn order0(model: &Model, obs: &LinearObservable, t: f64, x: &PhaseVector, opts: &OdeOptions) -> Result<SpinMatrix> {
    check_observable(obs)?;
    let g = propagator_g(model, t, 0.0, x, opts)?.g;
    let gs = g.adjoint();
    let xt = chi_flow(&model.grid, t, x);
    let mut out = &g * &obs.constant * &gs;
    for (v, m) in &obs.fields {
        out += &g * m * &gs * c(v.dot(&xt));
    }
    Ok(out)
}

/// `A^[j](t, X)` from the recursion.
pub fn order_j(model: &Model, obs: &LinearObservable, j: usize, t: f64, x: &PhaseVector, opts: &OdeOptions) -> Result<SpinMatrix> {
    let basis = ReducedBasis::build(model);
    Ok(solve_jets(model, &basis, obs, t, x, j, opts)?.orders[j][0].clone())
}

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixRecord = Vec<Vec<[f64; 2]>>;

pub fn matrix_record(m: &SpinMatrix) -> MatrixRecord {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_record(r: &MatrixRecord) -> SpinMatrix {
    let n = r.len();
    SpinMatrix::from_fn(n, n, |i, j| C64::new(r[i][j][0], r[i][j][1]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyMeta {
    pub tol: f64,
    pub grid_id: String,
    pub q_trace: f64,
    pub reduced_rank: usize,
    pub ode: OdeLog,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyResult {
    pub observable: String,
    pub t: f64,
    #[serde(rename = "X")]
    pub x: Vec<f64>,
    pub orders: Vec<MatrixRecord>,
    pub meta: HierarchyMeta,
}

impl HierarchyResult {
    pub fn order(&self, j: usize) -> SpinMatrix {
        matrix_from_record(&self.orders[j])
    }
}

/// All coefficients `A^[0..=M](t, X)` of an observable.
pub fn hierarchy(model: &Model, spec: &ObservableSpec, t: f64, x: &PhaseVector, m_max: usize, opts: &OdeOptions) -> Result<HierarchyResult> {
    let obs = LinearObservable::resolve(spec, model)?;
    let basis = ReducedBasis::build(model);
    let sol = solve_jets(model, &basis, &obs, t, x, m_max, opts)?;
    Ok(HierarchyResult {
        observable: spec.label(),
        t,
        x: x.to_flat(),
        orders: sol.orders.iter().map(|o| matrix_record(&o[0])).collect(),
        meta: HierarchyMeta {
            tol: opts.tol,
            grid_id: format!("{}kpts-{}-D{}", model.grid.n_kpoints(), model.cutoff.name(), model.dim()),
            q_trace: model.q_form(t).trace,
            reduced_rank: basis.rank(),
            ode: sol.log,
        },
    })
}
