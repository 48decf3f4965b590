use crate::error::Result;
use crate::report::{Check, CheckList};
use crate::tolerances::{CALCULUS_REL, EXACT_REL, OVERLAP_ABS, PROJECTOR_ABS, SEED_ABS};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spinfield::fock::{coherent_overlap_formula, coherent_state, inner, number_operator, segal_field, wick_symbol, FockBasis};
use spinfield::linalg::{c, expm_apply, frobenius, I};
use spinfield::model::{apply_helicity, coupling_b_grad, mode_index, polarization_project, Directions, Polarization, Vec3, COS};
use spinfield::symbol::{mizrahi_compose, multi_indices, wick_quantize, MatrixSymbol, ScalarSymbol};
use spinfield::{Model, ModelConfig, PhaseVector, SpinMatrix};

/// Fixed seed of the self-test samples.
pub const SELFTEST_SEED: u64 = 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: CheckList,
}

fn keys(d: usize, deg: u32) -> Vec<(Vec<u32>, Vec<u32>)> {
    (0..=deg)
        .flat_map(|k| multi_indices(2 * d, k))
        .map(|ab| (ab[..d].to_vec(), ab[d..].to_vec()))
        .collect()
}

fn cplx(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_scalar(rng: &mut ChaCha8Rng, d: usize, deg: u32) -> ScalarSymbol {
    let mut f = ScalarSymbol::zero(d, 1);
    for (a, b) in keys(d, deg) {
        f.add_term(a, b, cplx(rng));
    }
    f
}

fn random_matrix_symbol(rng: &mut ChaCha8Rng, d: usize, deg: u32, n: usize) -> MatrixSymbol {
    let mut f = MatrixSymbol::zero(d, n);
    for (a, b) in keys(d, deg) {
        f.add_term(a, b, SpinMatrix::from_fn(n, n, |_, _| cplx(rng)));
    }
    f
}

/// Uniform direction, radius uniform in `[0, radius]`.
fn random_point(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> PhaseVector {
    let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = PhaseVector::from_slices(&q, &p);
    x.scale(rng.gen_range(0.0..radius) / x.norm().max(1e-300))
}

/// Largest entry difference on columns that leave room for `room` more quanta, relative to the largest entry.
fn low_column_residual(b: &FockBasis, a: &DMatrix<C64>, bm: &DMatrix<C64>, room: usize, blk: usize) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for col in (0..b.dim()).filter(|&i| b.total(i) + room <= b.n_max()) {
        for s in 0..blk {
            let cc = col * blk + s;
            for r in 0..a.nrows() {
                diff = diff.max((a[(r, cc)] - bm[(r, cc)]).norm());
                scale = scale.max(bm[(r, cc)].norm());
            }
        }
    }
    diff / scale.max(1e-300)
}

fn calculus(rng: &mut ChaCha8Rng, out: &mut CheckList) -> Result<()> {
    // heat round trip on degree 6
    let mut worst = 0.0f64;
    for h in [0.05, 0.5, 2.0] {
        let f = random_scalar(rng, 2, 6);
        let fh = f.heat(h);
        let scale = fh.terms().values().map(|v| v.norm()).fold(1.0, f64::max);
        worst = worst.max(fh.heat(-h).max_coeff_diff(&f) / scale);
    }
    out.push(Check::at_most("heat round trip H_{-h} H_h = id (degree 6)", Some(1), worst, EXACT_REL));

    // q² + p² ↦ 2hN
    let mut worst = 0.0f64;
    let b = FockBasis::new(2, 12)?;
    let n = number_operator(&b).to_dense()?;
    for h in [0.25, 0.6, 1.0] {
        let mut f = ScalarSymbol::zero(2, 1);
        for j in 0..2 {
            let q = ScalarSymbol::q(2, j);
            let p = ScalarSymbol::p(2, j);
            f = f.add(&q.mul(&q)).add(&p.mul(&p));
        }
        let op = wick_quantize(&f, &b, h)?.to_dense()?;
        let expect = &n * c(2.0 * h);
        worst = worst.max(frobenius(&(op - &expect)) / frobenius(&expect));
    }
    out.push(Check::at_most("Wick quantization of q²+p² equals 2hN", Some(1), worst, EXACT_REL));

    // σ ∘ Op = id, scalar and matrix valued
    let mut worst = 0.0f64;
    for (d, n_max) in [(1, 30), (2, 25)] {
        let b = FockBasis::new(d, n_max)?;
        for h in [0.25, 0.5, 1.0] {
            let f = random_scalar(rng, d, 3);
            let op = wick_quantize(&f, &b, h)?;
            for _ in 0..8 {
                let x = random_point(rng, d, 1.0);
                let got = wick_symbol(&op, &b, &x, h, 1, 1e-8)?[(0, 0)];
                let want = f.eval(&x)?;
                worst = worst.max((got - want).norm() / want.norm().max(1.0));
            }
            let g = random_matrix_symbol(rng, d, 3, 2);
            let op = wick_quantize(&g, &b, h)?;
            for _ in 0..4 {
                let x = random_point(rng, d, 1.0);
                let got = wick_symbol(&op, &b, &x, h, 2, 1e-8)?;
                let want = g.eval(&x)?;
                worst = worst.max(frobenius(&(got - &want)) / frobenius(&want).max(1.0));
            }
        }
    }
    out.push(Check::at_most("Wick symbol of Wick quantization is the identity (degree 3, |X| ≤ 1)", Some(1), worst, CALCULUS_REL));

    // Op(f # g) = Op(f) Op(g) on columns unaffected by the cutoff
    let mut worst = 0.0f64;
    let b = FockBasis::new(2, 12)?;
    for h in [0.25, 0.7] {
        let f = random_scalar(rng, 2, 3);
        let g = random_scalar(rng, 2, 3);
        let lhs = wick_quantize(&mizrahi_compose(&f, &g, h), &b, h)?.to_dense()?;
        let rhs = wick_quantize(&f, &b, h)?.to_dense()? * wick_quantize(&g, &b, h)?.to_dense()?;
        worst = worst.max(low_column_residual(&b, &lhs, &rhs, 6, 1));
    }
    let b1 = FockBasis::new(1, 12)?;
    let h = 0.45;
    let f = random_matrix_symbol(rng, 1, 2, 2);
    let g = random_matrix_symbol(rng, 1, 3, 2);
    let lhs = wick_quantize(&mizrahi_compose(&f, &g, h), &b1, h)?.to_dense()?;
    let rhs = wick_quantize(&f, &b1, h)?.to_dense()? * wick_quantize(&g, &b1, h)?.to_dense()?;
    worst = worst.max(low_column_residual(&b1, &lhs, &rhs, 5, 2));
    out.push(Check::at_most("Mizrahi composition matches the operator product", Some(1), worst, CALCULUS_REL));
    Ok(())
}

fn coherent(rng: &mut ChaCha8Rng, out: &mut CheckList) -> Result<()> {
    let b = FockBasis::new(2, 25)?;
    let mut worst = 0.0f64;
    for h in [0.5, 0.75, 1.0] {
        for _ in 0..6 {
            let x = random_point(rng, 2, 1.0);
            let y = random_point(rng, 2, 1.0);
            let ov = inner(&coherent_state(&b, &x, h)?.amplitudes, &coherent_state(&b, &y, h)?.amplitudes);
            worst = worst.max((ov - coherent_overlap_formula(&x, &y, h)).norm());
        }
    }
    out.push(Check::at_most("coherent-state overlap matches the closed form", Some(2), worst, OVERLAP_ABS));

    // Ψ_X = exp(−i Φ_S(𝓕X)/√h) Ω, up to the truncated tail
    let mut ratio = 0.0f64;
    let mut detail = String::new();
    for h in [0.5f64, 1.0] {
        let x = random_point(rng, 2, 1.0);
        let xhat = x.fcal();
        let phi = segal_field(&b, &xhat, 1.0)?;
        let scale = -I / h.sqrt();
        let bound = 2.0 * (xhat.norm() / h.sqrt()) * (b.n_max() as f64 + 1.0).sqrt();
        let mut vac = vec![c(0.0); b.dim()];
        vac[0] = c(1.0);
        let out_state = expm_apply(
            |v, y| {
                phi.apply(v, y);
                for w in y.iter_mut() {
                    *w *= scale;
                }
            },
            &vac,
            bound,
        );
        let cs = coherent_state(&b, &x, h)?;
        let diff = out_state.iter().zip(cs.amplitudes.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let allowed = 1e-8 + 10.0 * cs.tail_mass.sqrt();
        if diff / allowed >= ratio {
            ratio = diff / allowed;
            detail = format!("difference {diff:.2e}, allowance {allowed:.2e}");
        }
    }
    out.push(Check::at_most("displacement of the vacuum reproduces the coherent state (relative to tail allowance)", Some(2), ratio, 1.0).with_detail(detail));
    Ok(())
}

/// Two-shell octahedral grid with one spin at the origin.
pub fn structural_model() -> Result<Model> {
    let mut cfg = ModelConfig::minimal([0.2, -0.1, 0.7]);
    cfg.grid.radial_nodes = 2;
    cfg.grid.kmax = Some(3.0);
    cfg.grid.directions = Directions::Named("octahedral".into());
    Ok(Model::new(cfg)?)
}

fn random_vec3(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn structural(rng: &mut ChaCha8Rng, out: &mut CheckList) -> Result<()> {
    let model = structural_model()?;
    let d = model.dim();
    let mut seed = 0.0f64;
    let mut bb = 0.0f64;
    for _ in 0..6 {
        let x = random_vec3(rng);
        let y = random_vec3(rng);
        let (_, grad) = model.rho(&(x - y));
        for m in 0..3 {
            let e = model.coupling_e(m, &x)?;
            let bx = model.coupling_b(m, &x)?;
            for n in 0..3 {
                let by = model.coupling_b(n, &y)?;
                let rhs = grad.dot(&Vec3::ith(m, 1.0).cross(&Vec3::ith(n, 1.0)));
                seed = seed.max((e.sigma(&by) - rhs).abs());
                bb = bb.max(bx.sigma(&by).abs());
            }
        }
    }
    out.push(Check::at_most("symplectic seed σ(E_mx, B_ny) = ∇ρ(x−y)·(e_m × e_n)", Some(3), seed, SEED_ABS));
    out.push(Check::at_most("magnetic couplings commute: σ(B_mx, B_ny) = 0", Some(3), bb, SEED_ABS));

    // divergence of B paired with random phase points, and transverse mode frames
    let mut div = 0.0f64;
    for _ in 0..4 {
        let z = random_point(rng, d, 1.0);
        let x = random_vec3(rng);
        let s: f64 = (0..3)
            .map(|m| coupling_b_grad(&model.grid, &model.cutoff, m, m, &x).map(|g| g.dot(&z)))
            .sum::<spinfield::Result<f64>>()?;
        div = div.max(s.abs());
    }
    let g = &model.grid;
    let mut trans = 0.0f64;
    let x = random_vec3(rng);
    for m in 0..3 {
        let b = model.coupling_b(m, &x)?;
        let e = model.coupling_e(m, &x)?;
        for i in 0..g.n_kpoints() {
            let kh = g.kpoints[i] / g.omegas[i];
            for v in [&b, &e] {
                for part in [&v.q, &v.p] {
                    let field = g.frame_vector(i, 0) * part[mode_index(i, COS, 0)] + g.frame_vector(i, 1) * part[mode_index(i, COS, 1)];
                    trans = trans.max(field.dot(&kh).abs());
                }
            }
        }
    }
    out.push(Check::at_most("coupled fields are divergence free", Some(3), div, SEED_ABS));
    out.push(Check::at_most("mode polarizations are transverse to k", Some(3), trans, SEED_ABS));

    // Π± algebra and J² = −I, J commuting with 𝓕
    let mut alg = 0.0f64;
    for _ in 0..6 {
        let x = random_point(rng, d, 2.0);
        let p = polarization_project(g, Polarization::Plus, &x)?;
        let mm = polarization_project(g, Polarization::Minus, &x)?;
        let pp = polarization_project(g, Polarization::Plus, &p)?;
        let pm = polarization_project(g, Polarization::Minus, &p)?;
        let jx = apply_helicity(g, &x)?;
        let jjx = apply_helicity(g, &jx)?;
        let jp = apply_helicity(g, &p)?;
        let jm = apply_helicity(g, &mm)?;
        for r in [
            (&pp - &p).norm(),
            (&(&p + &mm) - &x).norm(),
            p.dot(&mm).abs(),
            pm.norm(),
            (&jjx + &x).norm(),
            (&jp - &p.fcal()).norm(),
            (&jm + &mm.fcal()).norm(),
            (&apply_helicity(g, &x.fcal())? - &jx.fcal()).norm(),
        ] {
            alg = alg.max(r);
        }
    }
    out.push(Check::at_most("circular polarization projectors and helicity algebra", Some(3), alg, PROJECTOR_ABS));
    Ok(())
}

/// Calculus, coherent-state and structural identities with measured residuals.
pub fn run_calculus_selftest() -> Result<SelftestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(SELFTEST_SEED);
    let mut checks = CheckList::default();
    calculus(&mut rng, &mut checks)?;
    coherent(&mut rng, &mut checks)?;
    structural(&mut rng, &mut checks)?;
    checks.sort();
    Ok(SelftestReport {
        seed: SELFTEST_SEED,
        checks,
    })
}
