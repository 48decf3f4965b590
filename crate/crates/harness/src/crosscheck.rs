use crate::convergence::{cmp_f64, SampleRecord};
use crate::error::Result;
use crate::plan::ExperimentPlan;
use crate::pool::run_jobs;
use crate::report::{Check, CheckList};
use crate::tolerances::{DUAL_PATH_REL, FD_STEP, HYGIENE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spinfield::hierarchy::{bloch_spin0, first_order, maxwell_cross_check, order0, propagator_g, solve_jets, tangent_fd_residual, ReducedBasis};
use spinfield::linalg::{max_abs, unitarity_defect};
use spinfield::model::Vec3;
use spinfield::oracle::{LinearObservable, ObservableSpec};
use spinfield::{Model, PhaseVector, SpinMatrix};

/// Dual-path deviations at one `(X, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRecord {
    pub x_id: String,
    pub t: f64,
    /// Bloch spins against `G σ G*`.
    pub bloch_vs_conjugation: f64,
    /// Maxwell–Bloch spin correction against the order-1 recursion.
    pub spin1_vs_recursion: f64,
    /// Sourced Maxwell fields against the order-1 recursion for field observables.
    pub maxwell_vs_recursion: f64,
    /// `|div B^[1]|, |div E^[1]|` relative to the field scale.
    pub divergence: f64,
    pub unitarity_defect: f64,
    /// Tangent against a central difference of the Bloch flow.
    pub tangent_fd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub name: Option<String>,
    pub seed: u64,
    pub samples: Vec<SampleRecord>,
    pub records: Vec<CrossRecord>,
    pub checks: CheckList,
}

/// `max|a − b| / max(|a|, |b|)`, or the plain difference when both vanish.
fn rel(a: &SpinMatrix, b: &SpinMatrix) -> f64 {
    let d = max_abs(&(a - b));
    let s = max_abs(a).max(max_abs(b));
    if s < 1e-14 {
        d
    } else {
        d / s
    }
}

/// Fixed probe point away from the spins.
const PROBE: [f64; 3] = [0.35, -0.15, 0.25];

fn record(model: &Model, basis: &ReducedBasis, x_id: &str, x: &PhaseVector, v: &PhaseVector, t: f64, plan: &ExperimentPlan) -> spinfield::Result<CrossRecord> {
    let opts = plan.ode_options();
    let s0 = bloch_spin0(model, t, x, &opts)?;
    let fo = first_order(model, t, x, &opts)?;
    let (mut bloch, mut spin1) = (0.0f64, 0.0f64);
    for lam in 0..model.n_spins() {
        for m in 0..3 {
            let obs = LinearObservable::resolve(&ObservableSpec::Spin { spin: lam, axis: m }, model)?;
            bloch = bloch.max(rel(&s0[lam][m], &order0(model, &obs, t, x, &opts)?));
            let jets = solve_jets(model, basis, &obs, t, x, 1, &opts)?;
            spin1 = spin1.max(rel(&fo.s1[lam][m], jets.value(1)));
        }
    }
    let mx = maxwell_cross_check(model, t, x, &[Vec3::from(PROBE)], &opts)?;
    let g = propagator_g(model, t, 0.0, x, &opts)?.g;
    let tangent_fd = if t > 0.0 {
        (0..model.n_spins())
            .map(|lam| tangent_fd_residual(model, lam, v, t, x, FD_STEP, &opts))
            .collect::<spinfield::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(CrossRecord {
        x_id: x_id.into(),
        t,
        bloch_vs_conjugation: bloch,
        spin1_vs_recursion: spin1,
        maxwell_vs_recursion: mx.max_rel_dev,
        divergence: mx.max_divergence / mx.scale.max(1.0),
        unitarity_defect: unitarity_defect(&g),
        tangent_fd,
    })
}

/// Dual-path agreement of the order-0 spins, the order-1 spin correction and the
/// order-1 fields over the plan's comparison times, plus tangent and unitarity hygiene.
pub fn run_crosscheck(plan: &ExperimentPlan) -> Result<CrosscheckReport> {
    let model = plan.model()?;
    let xs = plan.samples(&model)?;
    let basis = ReducedBasis::build(&model);
    // unit tangent direction per sample, from the plan seed
    let dirs: Vec<PhaseVector> = (0..xs.len())
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ (0x5EED_0000 + i as u64));
            let d = model.dim();
            let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = PhaseVector::from_slices(&q, &p);
            v.scale(1.0 / v.norm())
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..plan.crosscheck_t.len()).map(move |k| (i, k))).collect();
    let out = run_jobs(&jobs, |&(i, k)| record(&model, &basis, &xs[i].id, &xs[i].x, &dirs[i], plan.crosscheck_t[k], plan))?;
    let mut records = out.into_iter().collect::<spinfield::Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.x_id.cmp(&b.x_id).then(cmp_f64(a.t, b.t)));

    let worst = |f: fn(&CrossRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    let span = format!(
        "t in [{}, {}]",
        plan.crosscheck_t.iter().cloned().fold(f64::INFINITY, f64::min),
        plan.crosscheck_t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    let mut checks = CheckList::default();
    checks.push(Check::at_most("dual path: Bloch spins vs conjugated Pauli matrices", Some(4), worst(|r| r.bloch_vs_conjugation), DUAL_PATH_REL).with_detail(span.clone()));
    checks.push(Check::at_most("dual path: spin correction vs order-1 recursion", Some(4), worst(|r| r.spin1_vs_recursion), DUAL_PATH_REL).with_detail(span.clone()));
    checks.push(Check::at_most("dual path: sourced Maxwell fields vs order-1 recursion", Some(4), worst(|r| r.maxwell_vs_recursion), DUAL_PATH_REL).with_detail(span));
    checks.push(Check::at_most("order-1 fields are divergence free", None, worst(|r| r.divergence), 1e-10));
    checks.push(Check::at_most("crosscheck: propagator unitarity defect", Some(7), worst(|r| r.unitarity_defect), HYGIENE));
    checks.push(Check::at_most("crosscheck: tangent vs finite difference", Some(7), worst(|r| r.tangent_fd), HYGIENE));
    checks.sort();
    Ok(CrosscheckReport {
        name: plan.name.clone(),
        seed: plan.seed,
        samples: xs.iter().map(SampleRecord::from_resolved).collect(),
        records,
        checks,
    })
}
