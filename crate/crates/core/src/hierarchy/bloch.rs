//! Maxwell–Bloch form of the first two orders, integrated directly in mode space.
//!
//! This path never touches the co-moving recursion; it serves as an independent
//! computation of the spin and field coefficients.

use super::flow::{chi_flow, FlowCache};
use super::order::solve_jets;
use super::propagator::mat_from;
use super::reduced::ReducedBasis;
use crate::error::{Error, Result};
use crate::linalg::{anticommutator, c, max_abs, SpinMatrix};
use crate::model::{coupling_b_grad, levi_civita, Model, PhaseVector, Vec3};
use crate::ode::{integrate, integrate_dense, no_post, OdeLog, OdeOptions};
use crate::oracle::LinearObservable;
use num_complex::Complex64 as C64;

/// `[S_1, S_2, S_3]` for one spin.
pub type SpinTriple = [SpinMatrix; 3];

fn zero_triple(n: usize) -> SpinTriple {
    std::array::from_fn(|_| SpinMatrix::zeros(n, n))
}

/// `out_j += w Σ ε_{jml} a_m S_l` for scalar `a`.
fn add_cross(out: &mut SpinTriple, a: &[f64; 3], s: &SpinTriple, w: f64) {
    for j in 0..3 {
        for m in 0..3 {
            for l in 0..3 {
                let e = levi_civita(j, m, l);
                if e != 0.0 && a[m] != 0.0 {
                    out[j] += &s[l] * c(w * e * a[m]);
                }
            }
        }
    }
}

fn field0(model: &Model, lam: usize, xt: &PhaseVector) -> [f64; 3] {
    std::array::from_fn(|m| model.beta[m] + model.b(lam, m).dot(xt))
}

fn pack(mats: &[&SpinMatrix], out: &mut [C64]) {
    let nn = mats[0].len();
    for (i, m) in mats.iter().enumerate() {
        out[i * nn..(i + 1) * nn].copy_from_slice(m.as_slice());
    }
}

/// Order-0 Bloch spins: `dS/dt = 2(β + B^[0](x_λ, t, X)) × S`, `S(0) = σ^{[λ]}`.
pub fn bloch_spin0(model: &Model, t: f64, x: &PhaseVector, opts: &OdeOptions) -> Result<Vec<SpinTriple>> {
    Ok(bloch_spin0_dense(model, &[t], x, opts)?.0.pop().unwrap())
}

/// Order-0 Bloch spins at several (monotone) times.
pub fn bloch_spin0_dense(model: &Model, times: &[f64], x: &PhaseVector, opts: &OdeOptions) -> Result<(Vec<Vec<SpinTriple>>, OdeLog)> {
    model.h_int_symbol(x)?;
    let n = model.spin_dim();
    let nn = n * n;
    let ns = model.n_spins();
    let mut y0 = vec![C64::new(0.0, 0.0); 3 * ns * nn];
    for lam in 0..ns {
        for m in 0..3 {
            y0[(3 * lam + m) * nn..(3 * lam + m + 1) * nn].copy_from_slice(model.sigma(lam, m).as_slice());
        }
    }
    let unpack = |y: &[C64]| -> Vec<SpinTriple> {
        (0..ns)
            .map(|lam| std::array::from_fn(|m| mat_from(&y[(3 * lam + m) * nn..], n)))
            .collect()
    };
    let rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
        let xt = chi_flow(&model.grid, s, x);
        for (lam, st) in unpack(y).iter().enumerate() {
            let mut d = zero_triple(n);
            add_cross(&mut d, &field0(model, lam, &xt), st, 2.0);
            pack(&[&d[0], &d[1], &d[2]], &mut dy[3 * lam * nn..]);
        }
    };
    let (ys, log) = integrate_dense(rhs, no_post, 0.0, times, &y0, opts)?;
    Ok((ys.iter().map(|y| unpack(y)).collect(), log))
}

/// Directional derivatives `dS^{[λ,0]}(V)` at the given times, from the
/// linearized Bloch equation integrated with the base trajectory.
pub fn tangent0(model: &Model, lam: usize, v: &PhaseVector, times: &[f64], x: &PhaseVector, opts: &OdeOptions) -> Result<Vec<SpinTriple>> {
    model.h_int_symbol(x)?;
    model.h_int_symbol(v)?;
    if lam >= model.n_spins() {
        return Err(Error::Index {
            what: "spin",
            value: lam,
            lo: 0,
            hi: model.n_spins() - 1,
        });
    }
    let n = model.spin_dim();
    let nn = n * n;
    let mut y0 = vec![C64::new(0.0, 0.0); 6 * nn];
    for m in 0..3 {
        y0[m * nn..(m + 1) * nn].copy_from_slice(model.sigma(lam, m).as_slice());
    }
    let rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
        let flow = FlowCache::new(&model.grid, s);
        let xt = flow.apply(x);
        let vt = flow.apply(v);
        let st: SpinTriple = std::array::from_fn(|m| mat_from(&y[m * nn..], n));
        let ds: SpinTriple = std::array::from_fn(|m| mat_from(&y[(3 + m) * nn..], n));
        let b0 = field0(model, lam, &xt);
        let db: [f64; 3] = std::array::from_fn(|m| model.b(lam, m).dot(&vt));
        let mut d0 = zero_triple(n);
        add_cross(&mut d0, &b0, &st, 2.0);
        let mut d1 = zero_triple(n);
        add_cross(&mut d1, &b0, &ds, 2.0);
        add_cross(&mut d1, &db, &st, 2.0);
        pack(&[&d0[0], &d0[1], &d0[2], &d1[0], &d1[1], &d1[2]], dy);
    };
    let (ys, _) = integrate_dense(rhs, no_post, 0.0, times, &y0, opts)?;
    Ok(ys
        .iter()
        .map(|y| std::array::from_fn(|m| mat_from(&y[(3 + m) * nn..], n)))
        .collect())
}

/// `dS^{[λ,j]}(V)` at the given times. Order 0 uses the linearized Bloch equation;
/// higher orders read the linear jet of the recursion (exact along the reduced
/// subspace, which is the only dependence the spin coefficients have).
pub fn tangent_derivatives(
    model: &Model,
    lam: usize,
    j: usize,
    v: &PhaseVector,
    times: &[f64],
    x: &PhaseVector,
    opts: &OdeOptions,
) -> Result<Vec<SpinTriple>> {
    if j == 0 {
        return tangent0(model, lam, v, times, x, opts);
    }
    let basis = ReducedBasis::build(model);
    times
        .iter()
        .map(|&t| {
            let mut out = zero_triple(model.spin_dim());
            for (m, o) in out.iter_mut().enumerate() {
                let obs = spin_observable(model, lam, m);
                *o = solve_jets(model, &basis, &obs, t, x, j + 1, opts)?.derivative_x(j, v)?;
            }
            Ok(out)
        })
        .collect()
}

fn spin_observable(model: &Model, lam: usize, m: usize) -> LinearObservable {
    LinearObservable {
        constant: model.sigma(lam, m).clone(),
        fields: vec![],
        number: 0.0,
    }
}

/// Largest relative deviation between the order-0 tangent and a central
/// difference of the Bloch spins with step `eps`.
pub fn tangent_fd_residual(model: &Model, lam: usize, v: &PhaseVector, t: f64, x: &PhaseVector, eps: f64, opts: &OdeOptions) -> Result<f64> {
    let ds = tangent0(model, lam, v, &[t], x, opts)?.pop().unwrap();
    let mut xp = x.clone();
    xp.axpy(eps, v);
    let mut xm = x.clone();
    xm.axpy(-eps, v);
    let sp = bloch_spin0(model, t, &xp, opts)?;
    let sm = bloch_spin0(model, t, &xm, opts)?;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for m in 0..3 {
        let fd = (&sp[lam][m] - &sm[lam][m]) * c(0.5 / eps);
        num = num.max(max_abs(&(&fd - &ds[m])));
        den = den.max(max_abs(&ds[m]));
    }
    Ok(num / den.max(1e-12))
}

/// First-order Maxwell–Bloch state at time `t`.
#[derive(Debug, Clone)]
pub struct FirstOrder {
    pub t: f64,
    pub x: PhaseVector,
    /// `S^{[λ,0]}(t, X)`.
    pub s0: Vec<SpinTriple>,
    /// `dS^{[λ,0]}(e_l)` along the real directions of the reduced subspace.
    pub ds0: Vec<Vec<SpinTriple>>,
    pub directions: Vec<PhaseVector>,
    /// `S^{[λ,1]}(t, X)`.
    pub s1: Vec<SpinTriple>,
    /// Matrix-valued first-order correction `Z^1` to the classical field point;
    /// the order-1 symbol of `Φ_{S,h}(V)` is `V·Z^1`.
    pub z1_q: Vec<SpinMatrix>,
    pub z1_p: Vec<SpinMatrix>,
    pub log: OdeLog,
}

impl FirstOrder {
    /// `V·Z^1`.
    pub fn field1(&self, v: &PhaseVector) -> SpinMatrix {
        let n = self.z1_q[0].nrows();
        let mut out = SpinMatrix::zeros(n, n);
        for j in 0..v.dim() {
            if v.q[j] != 0.0 {
                out += &self.z1_q[j] * c(v.q[j]);
            }
            if v.p[j] != 0.0 {
                out += &self.z1_p[j] * c(v.p[j]);
            }
        }
        out
    }

    /// `dS^{[λ,0]}_m(w)` for `w` in the reduced subspace (X-space direction).
    pub fn ds0_along(&self, lam: usize, m: usize, w: &PhaseVector) -> SpinMatrix {
        let n = self.s0[0][0].nrows();
        let mut out = SpinMatrix::zeros(n, n);
        for (e, d) in self.directions.iter().zip(&self.ds0[lam]) {
            let a = w.dot(e);
            if a != 0.0 {
                out += &d[m] * c(a);
            }
        }
        out
    }

    /// `Σ_m ∂_m B^[1]_m(x)` (or of `E^[1]` with `electric`), which must vanish.
    pub fn divergence(&self, model: &Model, x: &Vec3, electric: bool) -> Result<SpinMatrix> {
        let n = self.z1_q[0].nrows();
        let mut out = SpinMatrix::zeros(n, n);
        for m in 0..3 {
            let mut g = coupling_b_grad(&model.grid, &model.cutoff, m, m, x)?;
            if electric {
                g = crate::model::apply_helicity(&model.grid, &g)?;
            }
            out += self.field1(&g);
        }
        Ok(out)
    }
}

/// Integrates, jointly on `[0, t]`:
/// * the Bloch spins `S^{[λ,0]}` and their tangents along the reduced subspace,
/// * the sourced field `Z^1' = −M𝓕 Z^1 − Σ_{λ,m} S_m^{[λ,0]} 𝓕B_{m x_λ}`, `Z^1(0) = 0`,
/// * `dS^{[λ,1]}_j/dt = 2ε_{jml}(β_m + B^[0]_m) S^{[λ,1]}_l + ε_{jml}{B^[1]_m, S^{[λ,0]}_l} + K_j`,
///   `K_j = ε_{jml} dS^{[λ,0]}_l(χ_{−t} B_{m x_λ})`, `S^{[λ,1]}(0) = 0`.
pub fn first_order(model: &Model, t: f64, x: &PhaseVector, opts: &OdeOptions) -> Result<FirstOrder> {
    model.h_int_symbol(x)?;
    let n = model.spin_dim();
    let nn = n * n;
    let ns = model.n_spins();
    let d = model.dim();
    let basis = ReducedBasis::build(model);
    let dirs = basis.real_directions();
    let nd = dirs.len();
    let omegas = model.grid.mode_omegas();
    // per spin: S0 (3), dS0 (3 nd), S1 (3); then Z^1 (2d)
    let per = 6 + 3 * nd;
    let zoff = ns * per;
    let total = zoff + 2 * d;
    let mut y0 = vec![C64::new(0.0, 0.0); total * nn];
    for lam in 0..ns {
        for m in 0..3 {
            y0[(lam * per + m) * nn..(lam * per + m + 1) * nn].copy_from_slice(model.sigma(lam, m).as_slice());
        }
    }
    let b_all: Vec<[PhaseVector; 3]> = (0..ns)
        .map(|lam| std::array::from_fn(|m| model.b(lam, m).clone()))
        .collect();
    let grab = |y: &[C64], i: usize| mat_from(&y[i * nn..], n);

    let rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
        let flow = FlowCache::new(&model.grid, s);
        let back = FlowCache::new(&model.grid, -s);
        let xt = flow.apply(x);
        let zq: Vec<SpinMatrix> = (0..d).map(|j| grab(y, zoff + j)).collect();
        let zp: Vec<SpinMatrix> = (0..d).map(|j| grab(y, zoff + d + j)).collect();
        let mut dzq: Vec<SpinMatrix> = (0..d).map(|j| &zp[j] * c(omegas[j])).collect();
        let mut dzp: Vec<SpinMatrix> = (0..d).map(|j| &zq[j] * c(-omegas[j])).collect();
        for lam in 0..ns {
            let base = lam * per;
            let s0: SpinTriple = std::array::from_fn(|m| grab(y, base + m));
            let s1: SpinTriple = std::array::from_fn(|m| grab(y, base + 3 + 3 * nd + m));
            let b0 = field0(model, lam, &xt);
            let mut d0 = zero_triple(n);
            add_cross(&mut d0, &b0, &s0, 2.0);
            pack(&[&d0[0], &d0[1], &d0[2]], &mut dy[base * nn..]);

            let mut ds_all = Vec::with_capacity(nd);
            for (l, e) in dirs.iter().enumerate() {
                let ds: SpinTriple = std::array::from_fn(|m| grab(y, base + 3 + 3 * l + m));
                let et = flow.apply(e);
                let db: [f64; 3] = std::array::from_fn(|m| b_all[lam][m].dot(&et));
                let mut dd = zero_triple(n);
                add_cross(&mut dd, &b0, &ds, 2.0);
                add_cross(&mut dd, &db, &s0, 2.0);
                pack(&[&dd[0], &dd[1], &dd[2]], &mut dy[(base + 3 + 3 * l) * nn..]);
                ds_all.push(ds);
            }

            // B^[1]_m(x_λ) = B_{m x_λ}·Z^1
            let b1: Vec<SpinMatrix> = (0..3)
                .map(|m| {
                    let v = &b_all[lam][m];
                    let mut acc = SpinMatrix::zeros(n, n);
                    for j in 0..d {
                        if v.q[j] != 0.0 {
                            acc += &zq[j] * c(v.q[j]);
                        }
                        if v.p[j] != 0.0 {
                            acc += &zp[j] * c(v.p[j]);
                        }
                    }
                    acc
                })
                .collect();
            let mut d1 = zero_triple(n);
            add_cross(&mut d1, &b0, &s1, 2.0);
            for j in 0..3 {
                for m in 0..3 {
                    for l in 0..3 {
                        let e = levi_civita(j, m, l);
                        if e == 0.0 {
                            continue;
                        }
                        d1[j] += anticommutator(&b1[m], &s0[l]) * c(e);
                        // K: tangent of S^{[λ,0]}_l along χ_{−s} B_{m x_λ}
                        let w = back.apply(&b_all[lam][m]);
                        for (ed, ds) in dirs.iter().zip(&ds_all) {
                            let a = w.dot(ed);
                            if a != 0.0 {
                                d1[j] += &ds[l] * c(e * a);
                            }
                        }
                    }
                }
            }
            pack(&[&d1[0], &d1[1], &d1[2]], &mut dy[(base + 3 + 3 * nd) * nn..]);

            // source −Σ_m S_m 𝓕B_m; (𝓕B)_q = −B_p, (𝓕B)_p = B_q
            for m in 0..3 {
                let v = &b_all[lam][m];
                for j in 0..d {
                    if v.p[j] != 0.0 {
                        dzq[j] += &s0[m] * c(v.p[j]);
                    }
                    if v.q[j] != 0.0 {
                        dzp[j] -= &s0[m] * c(v.q[j]);
                    }
                }
            }
        }
        for j in 0..d {
            dy[(zoff + j) * nn..(zoff + j + 1) * nn].copy_from_slice(dzq[j].as_slice());
            dy[(zoff + d + j) * nn..(zoff + d + j + 1) * nn].copy_from_slice(dzp[j].as_slice());
        }
    };
    let (y, log) = integrate(rhs, no_post, 0.0, t, &y0, opts)?;
    let s0 = (0..ns).map(|lam| std::array::from_fn(|m| grab(&y, lam * per + m))).collect();
    let ds0 = (0..ns)
        .map(|lam| {
            (0..nd)
                .map(|l| std::array::from_fn(|m| grab(&y, lam * per + 3 + 3 * l + m)))
                .collect()
        })
        .collect();
    let s1 = (0..ns)
        .map(|lam| std::array::from_fn(|m| grab(&y, lam * per + 3 + 3 * nd + m)))
        .collect();
    Ok(FirstOrder {
        t,
        x: x.clone(),
        s0,
        ds0,
        directions: dirs,
        s1,
        z1_q: (0..d).map(|j| grab(&y, zoff + j)).collect(),
        z1_p: (0..d).map(|j| grab(&y, zoff + d + j)).collect(),
        log,
    })
}

/// `S^{[λ,1]}(t, X)` from the Maxwell–Bloch system.
pub fn spin_correction1(model: &Model, t: f64, x: &PhaseVector, opts: &OdeOptions) -> Result<Vec<SpinTriple>> {
    Ok(first_order(model, t, x, opts)?.s1)
}

/// Field-side comparison between the sourced Maxwell system and the recursion.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MaxwellReport {
    pub t: f64,
    /// Largest relative deviation of `B^[1]_m(x_λ)` and `E^[1]_m(x_λ)` between the two paths.
    pub max_rel_dev: f64,
    /// Largest `|div B^[1]|`, `|div E^[1]|` at the spin positions and probe points.
    pub max_divergence: f64,
    pub scale: f64,
}

/// Evaluates `B^[1]`, `E^[1]` at the spin positions (plus `probes`) both from the
/// Maxwell system and from the recursion for the field observables.
pub fn maxwell_cross_check(model: &Model, t: f64, x: &PhaseVector, probes: &[Vec3], opts: &OdeOptions) -> Result<MaxwellReport> {
    let fo = first_order(model, t, x, opts)?;
    let basis = ReducedBasis::build(model);
    let mut pts: Vec<Vec3> = model.positions.clone();
    pts.extend_from_slice(probes);
    let (mut dev, mut scale, mut div) = (0.0f64, 0.0f64, 0.0f64);
    let n = model.spin_dim();
    for p in &pts {
        for m in 0..3 {
            for v in [model.coupling_b(m, p)?, model.coupling_e(m, p)?] {
                let a = fo.field1(&v);
                let obs = LinearObservable {
                    constant: SpinMatrix::zeros(n, n),
                    fields: vec![(v, SpinMatrix::identity(n, n))],
                    number: 0.0,
                };
                let b = solve_jets(model, &basis, &obs, t, x, 1, opts)?.orders[1][0].clone();
                dev = dev.max(max_abs(&(&a - &b)));
                scale = scale.max(max_abs(&a)).max(max_abs(&b));
            }
        }
        div = div.max(max_abs(&fo.divergence(model, p, false)?));
        div = div.max(max_abs(&fo.divergence(model, p, true)?));
    }
    Ok(MaxwellReport {
        t,
        max_rel_dev: dev / scale.max(1e-12),
        max_divergence: div,
        scale,
    })
}

/// Order-1 coefficient of a pure-field observable `Φ_{S,h}(F)` by direct time
/// quadrature: `A^[1] = ∫_0^t G(t−s,0,X) Φ^[0](s) G(t−s,0,X)* ds` with the
/// `X`-independent source `Φ^[0](s) = −Σ_{λ,m} (F·𝓕χ_s B_{m x_λ}) σ_m^{[λ]}`.
/// Composite Simpson, doubled until two successive values agree to `tol`.
pub fn order1_pure_field(model: &Model, f: &PhaseVector, t: f64, x: &PhaseVector, tol: f64, opts: &OdeOptions) -> Result<SpinMatrix> {
    model.h_int_symbol(f)?;
    let n = model.spin_dim();
    if t == 0.0 {
        return Ok(SpinMatrix::zeros(n, n));
    }
    let source = |s: f64| {
        let flow = FlowCache::new(&model.grid, s);
        let mut out = SpinMatrix::zeros(n, n);
        for lam in 0..model.n_spins() {
            for m in 0..3 {
                let b = flow.apply(model.b(lam, m));
                out -= model.sigma(lam, m) * c(f.dot(&b.fcal()));
            }
        }
        out
    };
    let simpson = |k: usize| -> Result<SpinMatrix> {
        let nint = 2 * k;
        let taus: Vec<f64> = (0..=nint).map(|i| t * i as f64 / nint as f64).collect();
        let (gs, _) = super::propagator::propagator_g_dense(model, &taus, x, opts)?;
        let mut acc = SpinMatrix::zeros(n, n);
        for (i, g) in gs.iter().enumerate() {
            // node τ = t − s
            let s = t - taus[i];
            let w = if i == 0 || i == nint {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += g * source(s) * g.adjoint() * c(w);
        }
        Ok(acc * c(t / (3.0 * nint as f64)))
    };
    let mut k = 8;
    let mut prev = simpson(k)?;
    loop {
        k *= 2;
        let next = simpson(k)?;
        let diff = max_abs(&(&next - &prev));
        if diff <= tol * max_abs(&next).max(1.0) || k >= 1 << 14 {
            // Richardson step for the O(Δ⁴) Simpson error
            return Ok(&next + (&next - &prev) * c(1.0 / 15.0));
        }
        prev = next;
    }
}

/// `Σ_m (S^{[λ,0]}_m)² − 3 I`, largest entry over spins.
pub fn casimir_defect(s0: &[SpinTriple]) -> f64 {
    s0.iter()
        .map(|s| {
            let n = s[0].nrows();
            let sum = s.iter().fold(SpinMatrix::zeros(n, n), |a, m| a + m * m);
            max_abs(&(sum - SpinMatrix::identity(n, n) * c(3.0)))
        })
        .fold(0.0, f64::max)
}

/// Order-1 Casimir balance `Σ_m ({S^0_m, S^1_m} + ½ Σ_k (dS^0_m(u_k) − i dS^0_m(𝓕u_k))(dS^0_m(u_k) + i dS^0_m(𝓕u_k)))`,
/// which vanishes because `Σ_m S_m(t)² = 3` holds exactly for the evolved operators.
pub fn casimir_balance1(fo: &FirstOrder) -> f64 {
    let mut worst = 0.0f64;
    for lam in 0..fo.s0.len() {
        let n = fo.s0[lam][0].nrows();
        let mut acc = SpinMatrix::zeros(n, n);
        for m in 0..3 {
            acc += anticommutator(&fo.s0[lam][m], &fo.s1[lam][m]);
            for k in 0..fo.directions.len() / 2 {
                let dq = &fo.ds0[lam][2 * k][m];
                let dp = &fo.ds0[lam][2 * k + 1][m];
                let a = dq - dp * crate::linalg::I;
                let b = dq + dp * crate::linalg::I;
                acc += a * b * c(0.5);
            }
        }
        worst = worst.max(max_abs(&acc));
    }
    worst
}
