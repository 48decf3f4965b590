use crate::convergence::{classify, cmp_f64, exact_run, failure_status, mode_selection, truncation_error, CellStatus, ConvergenceCell, Hygiene, SampleRecord};
use crate::error::Result;
use crate::plan::{ExperimentPlan, PolarizationChoice, ResolvedX};
use crate::pool::run_jobs;
use crate::report::{Check, CheckList, SweepRow};
use crate::tolerances::{slope_window, PHOTON_SIGN_REL, PHOTON_SLOPE_MIN};
use serde::{Deserialize, Serialize};
use spinfield::hierarchy::{chi_flow, first_order, free_e_dot_s, matrix_record, photon_rate_from, FirstOrder, MatrixRecord};
use spinfield::linalg::{c, frobenius, max_abs};
use spinfield::model::{polarization_project, Polarization};
use spinfield::oracle::{Hamiltonian, ObservableSpec, Oracle};
use spinfield::{Model, PhaseVector, SpinMatrix};

/// Leading rate split along the circular polarizations of `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationPart {
    pub polarization: PolarizationChoice,
    /// `|Π_± X|`
    pub norm: f64,
    /// `‖N^[0]_±‖` (Frobenius), the leading rate driven by `Π_± X` alone.
    pub rate_norm: f64,
    /// `‖N^[0]_± − ε ε_± Σ E^{free}_±·S‖ / max(‖N^[0]_±‖, tiny)`
    pub sign_residual: f64,
}

/// Photon-rate data for one `(t, X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonSample {
    pub t: f64,
    pub x_id: String,
    pub polarization: Option<PolarizationChoice>,
    pub n0: MatrixRecord,
    pub n1: MatrixRecord,
    /// `Σ_{λ,m} (E_{m x_λ}·χ_t X) S^{[λ,0]}_m`
    pub e_dot_s: MatrixRecord,
    /// Best real factor `r` with `N^[0] ≈ r·Σ E·S`, and its relative residual.
    pub ratio: f64,
    pub ratio_residual: f64,
    pub parts: Vec<PolarizationPart>,
    /// `‖N^[0] − N^[0]_+ − N^[0]_−‖`
    pub split_residual: f64,
}

/// The exact rate at `X = 0`, which must vanish with `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginRecord {
    pub t: f64,
    pub n0_norm: f64,
    pub exact: Vec<(f64, f64)>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhotonReport {
    pub name: Option<String>,
    pub seed: u64,
    /// Recorded convention: leading rate `= ε·ε_pol·Σ E^{free}·S` on `Π_±`, with `ε_pol = ±1`.
    pub sign: Option<f64>,
    pub samples: Vec<SampleRecord>,
    pub cells: Vec<ConvergenceCell>,
    pub leading: Vec<PhotonSample>,
    pub origin: Vec<OriginRecord>,
    pub hygiene: Hygiene,
    pub checks: CheckList,
}

impl PhotonReport {
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for cell in &self.cells {
            for &(h, e) in &cell.points {
                rows.push(SweepRow {
                    observable: format!("{} M={}", cell.observable, cell.order),
                    t: cell.t,
                    x_id: cell.x_id.clone(),
                    h: Some(h),
                    error: Some(e),
                    slope: cell.fit.map(|f| f.slope),
                    r2: cell.fit.map(|f| f.r2),
                    status: cell.status.as_str().into(),
                });
            }
            if cell.points.is_empty() {
                rows.push(SweepRow {
                    observable: format!("{} M={}", cell.observable, cell.order),
                    t: cell.t,
                    x_id: cell.x_id.clone(),
                    h: None,
                    error: None,
                    slope: None,
                    r2: None,
                    status: cell.status.as_str().into(),
                });
            }
        }
        rows
    }
}

fn pol_sign(p: PolarizationChoice) -> f64 {
    match p {
        PolarizationChoice::Plus => 1.0,
        PolarizationChoice::Minus => -1.0,
    }
}

/// Real part of the Frobenius inner product.
fn dot_re(a: &SpinMatrix, b: &SpinMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `r = argmin ‖a − r b‖` and the relative residual `‖a − r b‖ / ‖a‖`.
fn best_ratio(a: &SpinMatrix, b: &SpinMatrix) -> (f64, f64) {
    let bb = dot_re(b, b);
    if bb == 0.0 {
        return (0.0, if frobenius(a) == 0.0 { 0.0 } else { 1.0 });
    }
    let r = dot_re(b, a) / bb;
    let res = frobenius(&(a - b * c(r)));
    (r, res / frobenius(a).max(1e-300))
}

/// `(−Σ (𝓕B_{mλ}·χ_t Y) S_m, Σ (E_{m x_λ}·χ_t Y) S_m)` with the spins of `fo`.
fn leading_pair(model: &Model, fo: &FirstOrder, y: &PhaseVector) -> Result<(SpinMatrix, SpinMatrix)> {
    let n = model.spin_dim();
    let yt = chi_flow(&model.grid, fo.t, y);
    let mut rate = SpinMatrix::zeros(n, n);
    let mut es = SpinMatrix::zeros(n, n);
    for lam in 0..model.n_spins() {
        for m in 0..3 {
            rate -= &fo.s0[lam][m] * c(model.b(lam, m).fcal().dot(&yt));
            es += &fo.s0[lam][m] * c(model.coupling_e(m, &model.positions[lam])?.dot(&yt));
        }
    }
    Ok((rate, es))
}

fn leading_sample(model: &Model, fo: &FirstOrder, x: &ResolvedX, sign: f64) -> Result<PhotonSample> {
    let nn = photon_rate_from(model, fo);
    let es = free_e_dot_s(model, fo)?;
    let (ratio, ratio_residual) = best_ratio(&nn[0], &es);
    let mut parts = Vec::new();
    let mut sum = SpinMatrix::zeros(nn[0].nrows(), nn[0].ncols());
    for (choice, pol) in [(PolarizationChoice::Plus, Polarization::Plus), (PolarizationChoice::Minus, Polarization::Minus)] {
        let y = polarization_project(&model.grid, pol, &x.x)?;
        let (rate, e) = leading_pair(model, fo, &y)?;
        let expect = e * c(sign * pol_sign(choice));
        let rn = frobenius(&rate);
        parts.push(PolarizationPart {
            polarization: choice,
            norm: y.norm(),
            rate_norm: rn,
            sign_residual: frobenius(&(&rate - expect)) / rn.max(1e-300),
        });
        sum += rate;
    }
    Ok(PhotonSample {
        t: fo.t,
        x_id: x.id.clone(),
        polarization: x.polarization,
        n0: matrix_record(&nn[0]),
        n1: matrix_record(&nn[1]),
        e_dot_s: matrix_record(&es),
        ratio,
        ratio_residual,
        parts,
        split_residual: frobenius(&(&nn[0] - sum)),
    })
}

/// Compares the exact photon rate with `N^[0]` and `N^[0] + h N^[1]`, pins the
/// sign of the leading term on polarized samples and splits it along `Π_±`.
pub fn run_photon_rate(plan: &ExperimentPlan) -> Result<PhotonReport> {
    let model = plan.model()?;
    let xs = plan.samples(&model)?;
    plan.precheck(&xs)?;
    let opts = plan.ode_options();
    let spec = [ObservableSpec::NumberRate];
    let label = spec[0].label();

    let fjobs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..plan.t.len()).map(move |ti| (i, ti))).collect();
    let firsts = run_jobs(&fjobs, |&(i, ti)| first_order(&model, plan.t[ti], &xs[i].x, &opts))?;
    let ojobs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..plan.h.len()).map(move |hi| (i, hi))).collect();
    let runs = run_jobs(&ojobs, |&(i, hi)| exact_run(&model, plan, &xs[i], plan.h[hi], &spec))?;
    let mut hygiene = Hygiene::default();
    for r in runs.iter().flatten() {
        hygiene.absorb(&r.hygiene);
    }

    // the sign is pinned on polarized samples: N^[0] = ε ε_pol Σ E·S
    let mut pinned = Vec::new();
    for (j, &(i, _)) in fjobs.iter().enumerate() {
        if let (Some(pol), Ok(fo)) = (xs[i].polarization, &firsts[j]) {
            let (r, _) = best_ratio(&photon_rate_from(&model, fo)[0], &free_e_dot_s(&model, fo)?);
            pinned.push(r / pol_sign(pol));
        }
    }
    let sign = pinned.first().map(|s| s.signum());

    let mut cells = Vec::new();
    let mut leading = Vec::new();
    for (j, &(i, ti)) in fjobs.iter().enumerate() {
        let t = plan.t[ti];
        let fo = match &firsts[j] {
            Ok(fo) => Some(fo),
            Err(e) => {
                for &m in &plan.orders {
                    cells.push(failed_cell(&label, t, &xs[i].id, m, CellStatus::Error, format!("hierarchy: {e}")));
                }
                None
            }
        };
        let Some(fo) = fo else { continue };
        leading.push(leading_sample(&model, fo, &xs[i], sign.unwrap_or(1.0))?);
        let orders = photon_rate_from(&model, fo);
        let mut pts: Vec<(f64, SpinMatrix)> = Vec::new();
        let mut failure = None;
        for (hi, &h) in plan.h.iter().enumerate() {
            match &runs[i * plan.h.len() + hi] {
                Ok(run) => pts.push((h, run.symbols[ti][0].clone())),
                Err(e) if failure.is_none() => failure = Some((failure_status(e), format!("oracle at h = {h}: {e}"))),
                Err(_) => {}
            }
        }
        for &m in plan.orders.iter().filter(|&&m| m <= 1) {
            if let Some((s, why)) = &failure {
                cells.push(failed_cell(&label, t, &xs[i].id, m, *s, why.clone()));
                continue;
            }
            let points: Vec<(f64, f64)> = pts.iter().map(|(h, s)| (*h, truncation_error(s, &orders, m, *h))).collect();
            let (fit, status) = classify(&points, m);
            cells.push(ConvergenceCell {
                observable: label.clone(),
                t,
                x_id: xs[i].id.clone(),
                order: m,
                points,
                fit,
                window: slope_window(m),
                status,
                reason: None,
            });
        }
    }
    cells.sort_by(|a, b| (a.order, &a.x_id).cmp(&(b.order, &b.x_id)).then(cmp_f64(a.t, b.t)));
    leading.sort_by(|a, b| a.x_id.cmp(&b.x_id).then(cmp_f64(a.t, b.t)));

    let origin = origin_records(&model, plan)?;
    let mut checks = hygiene.checks("photon");
    checks.extend(photon_checks(&cells, &leading, &pinned, sign, &origin));
    checks.sort();
    Ok(PhotonReport {
        name: plan.name.clone(),
        seed: plan.seed,
        sign,
        samples: xs.iter().map(SampleRecord::from_resolved).collect(),
        cells,
        leading,
        origin,
        hygiene,
        checks,
    })
}

fn failed_cell(label: &str, t: f64, x_id: &str, m: usize, status: CellStatus, reason: String) -> ConvergenceCell {
    ConvergenceCell {
        observable: label.into(),
        t,
        x_id: x_id.into(),
        order: m,
        points: Vec::new(),
        fit: None,
        window: slope_window(m),
        status,
        reason: Some(reason),
    }
}

/// At `X = 0` the leading coefficient vanishes and the exact rate is `O(h)`.
fn origin_records(model: &Model, plan: &ExperimentPlan) -> Result<Vec<OriginRecord>> {
    let zero = PhaseVector::zeros(model.dim());
    let opts = plan.ode_options();
    let runs = run_jobs(&plan.h, |&h| -> Result<Vec<f64>> {
        let ham = Hamiltonian::build(model, plan.n_max, h, &mode_selection(model))?;
        let oracle = Oracle::new(model, ham, plan.propagation_options());
        let (ev, _) = oracle.evolve_coherent(&zero, &plan.t)?;
        ev.iter().map(|e| Ok(max_abs(&oracle.symbol_of(e, &ObservableSpec::NumberRate)?))).collect()
    })?;
    let runs: Vec<Vec<f64>> = runs.into_iter().collect::<Result<_>>()?;
    plan.t
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let fo = first_order(model, t, &zero, &opts)?;
            let exact: Vec<(f64, f64)> = plan.h.iter().zip(&runs).map(|(&h, r)| (h, r[ti])).collect();
            let (fit, _) = classify(&exact, 0);
            Ok(OriginRecord {
                t,
                n0_norm: max_abs(&photon_rate_from(model, &fo)[0]),
                exact,
                slope: fit.map(|f| f.slope),
            })
        })
        .collect()
}

fn photon_checks(cells: &[ConvergenceCell], leading: &[PhotonSample], pinned: &[f64], sign: Option<f64>, origin: &[OriginRecord]) -> CheckList {
    let mut l = CheckList::default();
    for cell in cells.iter().filter(|c| c.order == 0) {
        let name = format!("photon rate: leading-order slope, X={}, t={}", cell.x_id, cell.t);
        let check = match (cell.status, cell.fit) {
            (CellStatus::Exact, _) => Check::at_most(name, Some(6), cell.points.iter().map(|p| p.1).fold(0.0, f64::max), crate::tolerances::EXACT_ERROR).with_detail("exact"),
            (_, Some(f)) => Check::at_least(name, Some(6), f.slope, PHOTON_SLOPE_MIN).with_detail(format!("r2 {:.4}", f.r2)),
            (s, None) => Check::at_least(name, Some(6), f64::NAN, PHOTON_SLOPE_MIN).with_detail(cell.reason.clone().unwrap_or_else(|| s.as_str().into())),
        };
        l.push(check);
    }
    match sign {
        Some(s) => {
            let spread = pinned.iter().map(|p| (p - s).abs()).fold(0.0, f64::max);
            l.push(Check::at_most("photon rate: polarized leading term equals ε·ε_pol·E·S for one global ε", Some(6), spread, PHOTON_SIGN_REL).with_detail(format!("ε = {s:+}")));
            for p in leading.iter().filter(|p| p.polarization.is_some()) {
                l.push(Check::at_most(format!("photon rate: N0 proportional to E·S, X={}, t={}", p.x_id, p.t), Some(6), p.ratio_residual, PHOTON_SIGN_REL));
            }
        }
        None => l.push(Check::at_least("photon rate: polarized sample present for sign pinning", Some(6), 0.0, 1.0)),
    }
    for p in leading {
        let worst = p.parts.iter().map(|q| if q.rate_norm > 0.0 { q.sign_residual } else { 0.0 }).fold(p.split_residual, f64::max);
        l.push(Check::at_most(format!("photon rate: Π± decomposition, X={}, t={}", p.x_id, p.t), None, worst, PHOTON_SIGN_REL));
    }
    for o in origin {
        l.push(Check::at_most(format!("photon rate: leading term vanishes at X=0, t={}", o.t), Some(6), o.n0_norm, 1e-12));
        let worst = o.exact.iter().map(|p| p.1).fold(0.0, f64::max);
        let c = match o.slope {
            Some(s) => Check::at_least(format!("photon rate: exact rate at X=0 vanishes with h, t={}", o.t), None, s, PHOTON_SLOPE_MIN),
            None => Check::at_most(format!("photon rate: exact rate at X=0 vanishes with h, t={}", o.t), None, worst, crate::tolerances::EXACT_ERROR),
        };
        l.push(c);
    }
    l
}
