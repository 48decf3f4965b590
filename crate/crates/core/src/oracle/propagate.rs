use super::hamiltonian::Hamiltonian;
use crate::error::{Error, Result};
use crate::linalg::{c, expm_apply};
use num_complex::Complex64 as C64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PropagationOptions {
    /// Local error tolerance per step (absolute, on unit vectors).
    pub tol: f64,
    pub initial_step: f64,
    /// Smallest allowed step relative to `max(1, |t|)`.
    pub min_step_rel: f64,
    pub max_step: f64,
    /// Keep per-step records in the log.
    pub record_steps: bool,
    /// Largest tolerated coherent tail mass and top-shell population (checked by the oracle).
    pub tail_threshold: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            initial_step: 1e-2,
            min_step_rel: 1e-12,
            max_step: 0.1,
            record_steps: false,
            tail_threshold: 1e-10,
        }
    }
}

impl PropagationOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub local_error: f64,
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PropagationLog {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
    pub max_local_error: f64,
    /// Largest `|‖ψ‖ − 1|` increment of a single step.
    pub max_unitarity_defect: f64,
    pub final_norm_defect: f64,
    /// Population of the top photon shell at the end.
    pub top_shell_mass: f64,
    pub steps: Vec<StepRecord>,
}

impl PropagationLog {
    pub fn merge(&mut self, other: &PropagationLog) {
        let first = self.accepted == 0;
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.min_step = if first { other.min_step } else { self.min_step.min(other.min_step) };
        self.max_step = self.max_step.max(other.max_step);
        self.max_local_error = self.max_local_error.max(other.max_local_error);
        self.max_unitarity_defect = self.max_unitarity_defect.max(other.max_unitarity_defect);
        self.final_norm_defect = self.final_norm_defect.max(other.final_norm_defect);
        self.top_shell_mass = self.top_shell_mass.max(other.top_shell_mass);
        self.steps.extend_from_slice(&other.steps);
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Interaction-picture propagator state: free phases are handled exactly, the
/// generator `V(s) = e^{isK} H_int e^{−isK}` (with `K = dΓ(M_ω)`) is integrated by
/// midpoint exponentials with step halving.
pub struct Propagator<'a> {
    ham: &'a Hamiltonian,
    energies: Vec<f64>,
    opts: PropagationOptions,
}

impl<'a> Propagator<'a> {
    pub fn new(ham: &'a Hamiltonian, opts: PropagationOptions) -> Self {
        Self {
            ham,
            energies: ham.tensor_energies(),
            opts,
        }
    }

    /// `exp(−i dt V(s)) v`.
    fn midpoint_exp(&self, s: f64, dt: f64, v: &[C64], tmp: &mut Vec<C64>) -> Vec<C64> {
        let ph: Vec<C64> = self.energies.iter().map(|&e| C64::from_polar(1.0, -s * e)).collect();
        let n = v.len();
        tmp.resize(n, c(0.0));
        let op = |x: &[C64], y: &mut [C64]| {
            for i in 0..n {
                tmp[i] = ph[i] * x[i];
            }
            self.ham.h_int.apply(tmp, y);
            for i in 0..n {
                y[i] = C64::new(0.0, -dt) * ph[i].conj() * y[i];
            }
        };
        expm_apply(op, v, dt.abs() * self.ham.int_norm)
    }

    /// Interaction-picture evolution of `psi_i` from `t0` to `t1`.
    fn evolve_interaction(&self, t0: f64, t1: f64, psi_i: &[C64], log: &mut PropagationLog) -> Result<Vec<C64>> {
        let mut y = psi_i.to_vec();
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y);
        }
        let dir = span.signum();
        let floor = self.opts.min_step_rel * span.abs().max(1.0);
        let mut t = t0;
        let mut dt = self.opts.initial_step.min(self.opts.max_step).min(span.abs());
        let mut tmp = Vec::new();
        let first = log.accepted == 0;
        if first {
            log.min_step = f64::INFINITY;
        }
        while (t1 - t) * dir > 0.0 {
            dt = dt.min((t1 - t).abs());
            let h = dir * dt;
            let full = self.midpoint_exp(t + h / 2.0, h, &y, &mut tmp);
            let half = self.midpoint_exp(t + h / 4.0, h / 2.0, &y, &mut tmp);
            let half = self.midpoint_exp(t + 3.0 * h / 4.0, h / 2.0, &half, &mut tmp);
            let err = full
                .iter()
                .zip(&half)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / 3.0;
            if err <= self.opts.tol || dt <= floor {
                if err > self.opts.tol {
                    return Err(Error::StepFloor {
                        floor,
                        t,
                        steps: log.accepted,
                    });
                }
                let before = norm(&y);
                y = half;
                let defect = (norm(&y) - before).abs();
                t = if (t1 - (t + h)) * dir <= 0.0 { t1 } else { t + h };
                log.accepted += 1;
                log.min_step = log.min_step.min(dt);
                log.max_step = log.max_step.max(dt);
                log.max_local_error = log.max_local_error.max(err);
                log.max_unitarity_defect = log.max_unitarity_defect.max(defect);
                if self.opts.record_steps {
                    log.steps.push(StepRecord {
                        t,
                        dt: h,
                        local_error: err,
                        unitarity_defect: defect,
                    });
                }
                let grow = if err == 0.0 {
                    2.0
                } else {
                    (0.9 * (self.opts.tol / err).powf(1.0 / 3.0)).min(2.0)
                };
                dt = (dt * grow).min(self.opts.max_step);
            } else {
                log.rejected += 1;
                dt = (dt * (0.9 * (self.opts.tol / err).powf(1.0 / 3.0)).clamp(0.1, 0.5)).max(floor);
            }
        }
        Ok(y)
    }

    /// `e^{−i(t/h)H(h)} ψ0` sampled at each of `times` (any order, any sign).
    pub fn evolve_times(&self, psi0: &[C64], times: &[f64]) -> Result<(Vec<Vec<C64>>, PropagationLog)> {
        if psi0.len() != self.ham.dim() {
            return Err(Error::Dimension {
                expected: self.ham.dim(),
                got: psi0.len(),
            });
        }
        let mut log = PropagationLog::default();
        let mut order: Vec<usize> = (0..times.len()).collect();
        let mut out = vec![Vec::new(); times.len()];
        // forward and backward legs, each swept monotonically from 0
        order.sort_by(|&a, &b| times[a].abs().partial_cmp(&times[b].abs()).unwrap());
        for sign in [1.0, -1.0] {
            let mut t = 0.0;
            let mut y = psi0.to_vec();
            for &k in order.iter().filter(|&&k| {
                let tk = times[k];
                (sign > 0.0 && tk >= 0.0) || (sign < 0.0 && tk < 0.0)
            }) {
                y = self.evolve_interaction(t, times[k], &y, &mut log)?;
                t = times[k];
                out[k] = y
                    .iter()
                    .zip(&self.energies)
                    .map(|(z, &e)| z * C64::from_polar(1.0, -t * e))
                    .collect();
            }
        }
        if log.min_step.is_infinite() {
            log.min_step = 0.0;
        }
        for v in &out {
            log.final_norm_defect = log.final_norm_defect.max((norm(v) - norm(psi0)).abs());
            log.top_shell_mass = log.top_shell_mass.max(self.top_shell_mass(v));
        }
        Ok((out, log))
    }

    pub fn evolve(&self, psi0: &[C64], t: f64) -> Result<(Vec<C64>, PropagationLog)> {
        let (mut v, log) = self.evolve_times(psi0, &[t])?;
        Ok((v.pop().unwrap(), log))
    }

    fn top_shell_mass(&self, v: &[C64]) -> f64 {
        let n = self.ham.spin_dim;
        let top = self.ham.basis.n_max();
        v.iter()
            .enumerate()
            .filter(|(i, _)| self.ham.basis.total(i / n) == top)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }
}

/// `e^{−i(t/h)H(h)} ψ0` with the interaction-picture stepper.
pub fn evolve_interaction_picture(
    ham: &Hamiltonian,
    psi0: &[C64],
    t: f64,
    opts: PropagationOptions,
) -> Result<(Vec<C64>, PropagationLog)> {
    Propagator::new(ham, opts).evolve(psi0, t)
}
