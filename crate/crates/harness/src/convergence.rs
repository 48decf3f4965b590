use crate::error::Result;
use crate::fit::{fit_loglog, SlopeFit};
use crate::plan::{ExperimentPlan, ResolvedX};
use crate::pool::run_jobs;
use crate::report::{Check, CheckList, SweepRow};
use crate::tolerances::{slope_window, EXACT_ERROR, HYGIENE};
use serde::{Deserialize, Serialize};
use spinfield::hierarchy::{hierarchy, matrix_record, HierarchyResult, MatrixRecord};
use spinfield::linalg::{c, op_norm};
use spinfield::oracle::{Hamiltonian, ModeSelection, ObservableSpec, Oracle};
use spinfield::{Error, Model, SpinMatrix};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Pass,
    Fail,
    /// All errors below the exactness threshold; no slope fitted.
    Exact,
    /// The oracle reported a Fock-truncation failure for some `h`.
    Truncated,
    Error,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Exact => "exact",
            Self::Truncated => "truncated",
            Self::Error => "error",
        }
    }
}

/// Truncation errors `e_M(h)` of one (observable, t, X, M) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCell {
    pub observable: String,
    pub t: f64,
    pub x_id: String,
    pub order: usize,
    /// Raw `(h, e_M(h))` pairs.
    pub points: Vec<(f64, f64)>,
    pub fit: Option<SlopeFit>,
    pub window: (f64, Option<f64>),
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Exact symbol of one observable at one `(t, X, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRecord {
    pub observable: String,
    pub t: f64,
    pub x_id: String,
    pub h: f64,
    pub symbol: MatrixRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hygiene {
    pub max_unitarity_defect: f64,
    pub max_norm_defect: f64,
    pub max_energy_drift: f64,
    pub max_top_shell_mass: f64,
    pub oracle_runs: usize,
}

impl Hygiene {
    pub fn absorb(&mut self, o: &Hygiene) {
        self.max_unitarity_defect = self.max_unitarity_defect.max(o.max_unitarity_defect);
        self.max_norm_defect = self.max_norm_defect.max(o.max_norm_defect);
        self.max_energy_drift = self.max_energy_drift.max(o.max_energy_drift);
        self.max_top_shell_mass = self.max_top_shell_mass.max(o.max_top_shell_mass);
        self.oracle_runs += o.oracle_runs;
    }

    pub fn checks(&self, prefix: &str) -> CheckList {
        let mut l = CheckList::default();
        l.push(Check::at_most(format!("{prefix}: oracle unitarity defect"), Some(7), self.max_unitarity_defect.max(self.max_norm_defect), HYGIENE));
        l.push(Check::at_most(format!("{prefix}: oracle energy drift"), Some(7), self.max_energy_drift, HYGIENE));
        l
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    #[serde(rename = "X")]
    pub x: Vec<f64>,
    pub norm: f64,
}

impl SampleRecord {
    pub fn from_resolved(s: &ResolvedX) -> Self {
        Self {
            id: s.id.clone(),
            x: s.x.to_flat(),
            norm: s.x.norm(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub name: Option<String>,
    pub seed: u64,
    pub h: Vec<f64>,
    pub n_max: usize,
    pub samples: Vec<SampleRecord>,
    pub cells: Vec<ConvergenceCell>,
    pub coefficients: Vec<HierarchyResult>,
    pub exact: Vec<ExactRecord>,
    pub hygiene: Hygiene,
    pub checks: CheckList,
}

impl ConvergenceReport {
    /// One CSV row per `(cell, h)`; cells without points get a single row.
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for cell in &self.cells {
            let base = SweepRow {
                observable: format!("{} M={}", cell.observable, cell.order),
                t: cell.t,
                x_id: cell.x_id.clone(),
                h: None,
                error: None,
                slope: cell.fit.map(|f| f.slope),
                r2: cell.fit.map(|f| f.r2),
                status: cell.status.as_str().into(),
            };
            if cell.points.is_empty() {
                rows.push(base.clone());
            }
            for &(h, e) in &cell.points {
                rows.push(SweepRow {
                    h: Some(h),
                    error: Some(e),
                    ..base.clone()
                });
            }
        }
        rows
    }
}

/// Output of one oracle run at fixed `(X, h)`.
pub(crate) struct ExactRun {
    /// `symbols[t_index][observable_index]`
    pub symbols: Vec<Vec<SpinMatrix>>,
    pub hygiene: Hygiene,
}

/// Active modes only, unless nothing couples (then every mode is quantized).
pub(crate) fn mode_selection(model: &Model) -> ModeSelection {
    if model.active_modes().is_empty() {
        ModeSelection::All
    } else {
        ModeSelection::Active
    }
}

/// Evolves the coherent states at `X` for one `h` and evaluates every observable.
/// Energy drift is measured against the initial energies.
pub(crate) fn exact_run(model: &Model, plan: &ExperimentPlan, x: &ResolvedX, h: f64, specs: &[ObservableSpec]) -> spinfield::Result<ExactRun> {
    let ham = Hamiltonian::build(model, plan.n_max, h, &mode_selection(model))?;
    let oracle = Oracle::new(model, ham, plan.propagation_options());
    let mut times = vec![0.0];
    times.extend(plan.t.iter().copied());
    let (ev, log) = oracle.evolve_coherent(&x.x, &times)?;
    let e0 = oracle.energies(&ev[0]);
    let mut drift = 0.0f64;
    for e in &ev[1..] {
        for (a, b) in oracle.energies(e).iter().zip(&e0) {
            drift = drift.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    let symbols = ev[1..]
        .iter()
        .map(|e| specs.iter().map(|s| oracle.symbol_of(e, s)).collect::<spinfield::Result<Vec<_>>>())
        .collect::<spinfield::Result<Vec<_>>>()?;
    Ok(ExactRun {
        symbols,
        hygiene: Hygiene {
            max_unitarity_defect: log.max_unitarity_defect,
            max_norm_defect: log.final_norm_defect,
            max_energy_drift: drift,
            max_top_shell_mass: log.top_shell_mass,
            oracle_runs: 1,
        },
    })
}

pub(crate) fn failure_status(e: &Error) -> CellStatus {
    match e {
        Error::Truncation { .. } => CellStatus::Truncated,
        _ => CellStatus::Error,
    }
}

/// `‖exact − Σ_{j≤M} h^j A^[j]‖` in the operator norm.
pub fn truncation_error(exact: &SpinMatrix, orders: &[SpinMatrix], m: usize, h: f64) -> f64 {
    let mut partial = exact.clone();
    for (j, a) in orders.iter().enumerate().take(m + 1) {
        partial -= a * c(h.powi(j as i32));
    }
    op_norm(&partial)
}

/// Classifies a cell from its raw points.
pub fn classify(points: &[(f64, f64)], m: usize) -> (Option<SlopeFit>, CellStatus) {
    if points.iter().all(|p| p.1 <= EXACT_ERROR) {
        return (None, CellStatus::Exact);
    }
    let hs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let es: Vec<f64> = points.iter().map(|p| p.1).collect();
    match fit_loglog(&hs, &es) {
        Some(f) => {
            let (lo, hi) = slope_window(m);
            let ok = f.slope >= lo && hi.map_or(true, |hi| f.slope <= hi);
            (Some(f), if ok { CellStatus::Pass } else { CellStatus::Fail })
        }
        None => (None, CellStatus::Fail),
    }
}

pub(crate) fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

/// Observable family used by the "one field and one spin observable" requirement.
pub fn observable_class(spec: &ObservableSpec) -> Option<&'static str> {
    match spec {
        ObservableSpec::FieldB { .. } | ObservableSpec::FieldE { .. } | ObservableSpec::FieldEPol { .. } | ObservableSpec::CurlE { .. } => Some("field"),
        ObservableSpec::Spin { .. } | ObservableSpec::BlochRate { .. } => Some("spin"),
        _ => None,
    }
}

/// Compares oracle symbols against hierarchy partial sums over the whole plan.
pub fn run_convergence(plan: &ExperimentPlan) -> Result<ConvergenceReport> {
    let model = plan.model()?;
    let xs = plan.samples(&model)?;
    plan.precheck(&xs)?;
    let specs = &plan.observables;
    let m_max = plan.orders.iter().copied().max().unwrap_or(0);
    let opts = plan.ode_options();

    // hierarchy coefficients: one job per (X, observable, t)
    let hjobs: Vec<(usize, usize, usize)> = (0..xs.len())
        .flat_map(|i| (0..specs.len()).flat_map(move |k| (0..plan.t.len()).map(move |ti| (i, k, ti))))
        .collect();
    let coeffs = run_jobs(&hjobs, |&(i, k, ti)| hierarchy(&model, &specs[k], plan.t[ti], &xs[i].x, m_max, &opts))?;

    // oracle: one job per (X, h)
    let ojobs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..plan.h.len()).map(move |hi| (i, hi))).collect();
    let runs = run_jobs(&ojobs, |&(i, hi)| exact_run(&model, plan, &xs[i], plan.h[hi], specs))?;

    let mut hygiene = Hygiene::default();
    for r in runs.iter().flatten() {
        hygiene.absorb(&r.hygiene);
    }
    let run_at = |i: usize, hi: usize| &runs[i * plan.h.len() + hi];

    let mut cells = Vec::new();
    let mut exact = Vec::new();
    let mut coefficients = Vec::new();
    for (j, &(i, k, ti)) in hjobs.iter().enumerate() {
        let label = specs[k].label();
        let t = plan.t[ti];
        let hier = match &coeffs[j] {
            Ok(r) => {
                coefficients.push(r.clone());
                Some((0..=m_max).map(|o| r.order(o)).collect::<Vec<_>>())
            }
            Err(_) => None,
        };
        let mut points = Vec::new();
        let mut failure: Option<(CellStatus, String)> = None;
        if let Err(e) = &coeffs[j] {
            failure = Some((CellStatus::Error, format!("hierarchy: {e}")));
        }
        for (hi, &h) in plan.h.iter().enumerate() {
            match run_at(i, hi) {
                Ok(run) => {
                    let sym = &run.symbols[ti][k];
                    exact.push(ExactRecord {
                        observable: label.clone(),
                        t,
                        x_id: xs[i].id.clone(),
                        h,
                        symbol: matrix_record(sym),
                    });
                    if let Some(orders) = &hier {
                        points.push((h, sym.clone(), orders));
                    }
                }
                Err(e) => {
                    if failure.is_none() {
                        failure = Some((failure_status(e), format!("oracle at h = {h}: {e}")));
                    }
                }
            }
        }
        for &m in &plan.orders {
            let (fit, status, reason, pts) = match &failure {
                Some((s, why)) => (None, *s, Some(why.clone()), Vec::new()),
                None => {
                    let pts: Vec<(f64, f64)> = points.iter().map(|(h, s, o)| (*h, truncation_error(s, o, m, *h))).collect();
                    let (fit, status) = classify(&pts, m);
                    (fit, status, None, pts)
                }
            };
            cells.push(ConvergenceCell {
                observable: label.clone(),
                t,
                x_id: xs[i].id.clone(),
                order: m,
                points: pts,
                fit,
                window: slope_window(m),
                status,
                reason,
            });
        }
    }
    cells.sort_by(|a, b| {
        (&a.observable, a.order, &a.x_id)
            .cmp(&(&b.observable, b.order, &b.x_id))
            .then(cmp_f64(a.t, b.t))
    });
    exact.sort_by(|a, b| {
        (&a.observable, &a.x_id)
            .cmp(&(&b.observable, &b.x_id))
            .then(cmp_f64(a.t, b.t))
            .then(cmp_f64(b.h, a.h))
    });
    coefficients.sort_by(|a, b| a.observable.cmp(&b.observable).then(cmp_f64(a.t, b.t)).then(a.x.partial_cmp(&b.x).unwrap_or(Ordering::Equal)));

    let mut checks = hygiene.checks("convergence");
    checks.extend(class_checks(specs, &plan.orders, &cells));
    checks.sort();
    Ok(ConvergenceReport {
        name: plan.name.clone(),
        seed: plan.seed,
        h: plan.h.clone(),
        n_max: plan.n_max,
        samples: xs.iter().map(SampleRecord::from_resolved).collect(),
        cells,
        coefficients,
        exact,
        hygiene,
        checks,
    })
}

/// For each observable family present: the number of observables whose cells pass
/// at both `M = 0` and `M = 1` (for every t and X) must be at least one.
fn class_checks(specs: &[ObservableSpec], orders: &[usize], cells: &[ConvergenceCell]) -> CheckList {
    let mut out = CheckList::default();
    if !(orders.contains(&0) && orders.contains(&1)) {
        return out;
    }
    for class in ["field", "spin"] {
        let members: Vec<String> = specs.iter().filter(|s| observable_class(s) == Some(class)).map(|s| s.label()).collect();
        if members.is_empty() {
            continue;
        }
        let mut passing = 0usize;
        let mut detail = Vec::new();
        for label in &members {
            let mine: Vec<&ConvergenceCell> = cells.iter().filter(|c| &c.observable == label && c.order <= 1).collect();
            let ok = !mine.is_empty() && mine.iter().all(|c| c.status == CellStatus::Pass);
            passing += ok as usize;
            let slopes: Vec<String> = mine
                .iter()
                .map(|c| match c.fit {
                    Some(f) => format!("M{} {} {:.3}", c.order, c.x_id, f.slope),
                    None => format!("M{} {} {}", c.order, c.x_id, c.status.as_str()),
                })
                .collect();
            detail.push(format!("{label}: {}", slopes.join(", ")));
        }
        out.push(Check::at_least(format!("convergence: {class} observables with M=0 and M=1 slopes in window"), Some(5), passing as f64, 1.0).with_detail(detail.join("; ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_cells() {
        let hs = [0.4, 0.2, 0.1, 0.05];
        let lin: Vec<(f64, f64)> = hs.iter().map(|&h| (h, 0.3 * h)).collect();
        assert_eq!(classify(&lin, 0).1, CellStatus::Pass);
        assert_eq!(classify(&lin, 1).1, CellStatus::Fail);
        let quad: Vec<(f64, f64)> = hs.iter().map(|&h| (h, 0.3 * h * h)).collect();
        assert_eq!(classify(&quad, 0).1, CellStatus::Fail);
        assert_eq!(classify(&quad, 1).1, CellStatus::Pass);
        let tiny: Vec<(f64, f64)> = hs.iter().map(|&h| (h, 1e-12 * h)).collect();
        let (fit, s) = classify(&tiny, 0);
        assert_eq!(s, CellStatus::Exact);
        assert!(fit.is_none());
    }

    #[test]
    fn truncation_error_partial_sums() {
        let n = 2;
        let a0 = SpinMatrix::identity(n, n);
        let a1 = SpinMatrix::identity(n, n) * c(2.0);
        let h = 0.1;
        let exact = &a0 + &a1 * c(h);
        assert!((truncation_error(&exact, &[a0.clone(), a1.clone()], 0, h) - 0.2).abs() < 1e-14);
        assert!(truncation_error(&exact, &[a0, a1], 1, h) < 1e-15);
    }
}
