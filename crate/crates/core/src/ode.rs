//! Adaptive classical Runge-Kutta integrator with step-halving error control.
//!
//! States are flat complex vectors; callers pack their matrices into them.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OdeOptions {
    /// Local error tolerance per step (absolute, scaled by max(1, |y|_inf)).
    pub tol: f64,
    pub initial_step: f64,
    /// Smallest admissible step relative to the integration span.
    pub min_step_rel: f64,
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            initial_step: 1e-2,
            min_step_rel: 1e-13,
            max_step: 0.25,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OdeLog {
    pub accepted: usize,
    pub rejected: usize,
    pub max_local_error: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Number of times the post-step hook modified the state.
    pub corrections: usize,
}

impl OdeLog {
    fn record(&mut self, h: f64, err: f64) {
        if self.accepted == 0 {
            self.min_step = h.abs();
            self.max_step = h.abs();
        } else {
            self.min_step = self.min_step.min(h.abs());
            self.max_step = self.max_step.max(h.abs());
        }
        self.accepted += 1;
        self.max_local_error = self.max_local_error.max(err);
    }

    pub fn merge(&mut self, other: &OdeLog) {
        if other.accepted > 0 {
            if self.accepted == 0 {
                self.min_step = other.min_step;
            } else {
                self.min_step = self.min_step.min(other.min_step);
            }
            self.max_step = self.max_step.max(other.max_step);
        }
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.corrections += other.corrections;
        self.max_local_error = self.max_local_error.max(other.max_local_error);
    }
}

fn inf_norm(y: &[C64]) -> f64 {
    y.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn rk4_step<F>(f: &mut F, t: f64, y: &[C64], h: f64, out: &mut Vec<C64>, scratch: &mut [Vec<C64>; 5])
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, tmp] = scratch;
    f(t, y, k1);
    for i in 0..n {
        tmp[i] = y[i] + k1[i] * (0.5 * h);
    }
    f(t + 0.5 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + k2[i] * (0.5 * h);
    }
    f(t + 0.5 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + k3[i] * h;
    }
    f(t + h, tmp, k4);
    out.clear();
    out.extend((0..n).map(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0)));
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `post` runs after every accepted step and may project the state back onto a
/// constraint manifold; it returns `true` when it changed the state.
pub fn integrate<F, P>(
    mut f: F,
    mut post: P,
    t0: f64,
    t1: f64,
    y0: &[C64],
    opts: &OdeOptions,
) -> Result<(Vec<C64>, OdeLog)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    P: FnMut(&mut [C64]) -> bool,
{
    let mut log = OdeLog::default();
    let mut y = y0.to_vec();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y, log));
    }
    let dir = span.signum();
    let n = y.len();
    let mut scratch: [Vec<C64>; 5] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
    let mut full = Vec::with_capacity(n);
    let mut half = Vec::with_capacity(n);
    let mut two = Vec::with_capacity(n);
    let floor = opts.min_step_rel * span.abs().max(1.0);
    let mut h = opts.initial_step.min(opts.max_step).min(span.abs());
    let mut t = t0;
    while (t1 - t) * dir > 0.0 {
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let hs = step * dir;
        rk4_step(&mut f, t, &y, hs, &mut full, &mut scratch);
        rk4_step(&mut f, t, &y, 0.5 * hs, &mut half, &mut scratch);
        rk4_step(&mut f, t + 0.5 * hs, &half, 0.5 * hs, &mut two, &mut scratch);
        let diff = full
            .iter()
            .zip(&two)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let err = diff / 15.0;
        let scale = inf_norm(&y).max(1.0);
        if err <= opts.tol * scale || step <= floor {
            if err > opts.tol * scale {
                return Err(Error::StepFloor {
                    floor,
                    t,
                    steps: log.accepted,
                });
            }
            std::mem::swap(&mut y, &mut two);
            if post(&mut y) {
                log.corrections += 1;
            }
            log.record(step, err);
            t = if last { t1 } else { t + hs };
            if err < opts.tol * scale / 64.0 {
                h = (step * 2.0).min(opts.max_step);
            } else if last {
                h = h.max(step);
            } else {
                h = step;
            }
        } else {
            log.rejected += 1;
            h = step * 0.5;
            if h < floor {
                h = floor;
            }
        }
    }
    Ok((y, log))
}

/// Integrates and records the state at each of the (monotone) output times.
pub fn integrate_dense<F, P>(
    mut f: F,
    mut post: P,
    t0: f64,
    times: &[f64],
    y0: &[C64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<C64>>, OdeLog)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    P: FnMut(&mut [C64]) -> bool,
{
    let mut out = Vec::with_capacity(times.len());
    let mut log = OdeLog::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    for &tn in times {
        let (yn, l) = integrate(&mut f, &mut post, t, tn, &y, opts)?;
        log.merge(&l);
        y = yn;
        t = tn;
        out.push(y.clone());
    }
    Ok((out, log))
}

pub fn no_post(_: &mut [C64]) -> bool {
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        // y' = i y  =>  y(t) = e^{it}
        let opts = OdeOptions::with_tol(1e-12);
        let (y, log) = integrate(
            |_, y, dy| dy[0] = C64::new(0.0, 1.0) * y[0],
            no_post,
            0.0,
            3.0,
            &[C64::new(1.0, 0.0)],
            &opts,
        )
        .unwrap();
        assert!((y[0] - C64::from_polar(1.0, 3.0)).norm() < 1e-10);
        assert!(log.accepted > 0);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let opts = OdeOptions::with_tol(1e-12);
        let f = |t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(t.cos(), 0.5) * y[0];
        let (y1, _) = integrate(f, no_post, 0.0, 1.5, &[C64::new(1.0, 0.0)], &opts).unwrap();
        let (y0, _) = integrate(f, no_post, 1.5, 0.0, &y1, &opts).unwrap();
        assert!((y0[0] - 1.0).norm() < 1e-10);
    }

    #[test]
    fn dense_output_hits_requested_times() {
        let opts = OdeOptions::with_tol(1e-12);
        let ts = [0.5, 1.0, 2.0];
        let (ys, _) = integrate_dense(
            |_, y, dy| dy[0] = -y[0],
            no_post,
            0.0,
            &ts,
            &[C64::new(1.0, 0.0)],
            &opts,
        )
        .unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0].re - (-t).exp()).abs() < 1e-10);
        }
    }
}
