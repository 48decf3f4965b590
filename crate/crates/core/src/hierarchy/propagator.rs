use super::flow::chi_flow;
use crate::error::Result;
use crate::linalg::{polar_unitary, unitarity_defect, SpinMatrix, I};
use crate::model::{Model, PhaseVector};
use crate::ode::{integrate, integrate_dense, OdeLog, OdeOptions};
use num_complex::Complex64 as C64;

/// `G(t, s, X)` with its integration log.
#[derive(Debug, Clone)]
pub struct PropagatorState {
    pub t: f64,
    pub s: f64,
    pub g: SpinMatrix,
    pub log: OdeLog,
}

pub(crate) fn mat_from(y: &[C64], n: usize) -> SpinMatrix {
    SpinMatrix::from_column_slice(n, n, &y[..n * n])
}

fn rhs<'a>(model: &'a Model, x: &PhaseVector, n: usize) -> impl Fn(f64, &[C64], &mut [C64]) + 'a {
    let x = x.clone();
    move |t, y, dy| {
        let g = mat_from(y, n);
        let h = model.h_int_symbol(&chi_flow(&model.grid, t, &x)).expect("dimension checked");
        dy.copy_from_slice((g * h * I).as_slice());
    }
}

fn unitarize(n: usize, tol: f64) -> impl FnMut(&mut [C64]) -> bool {
    move |y| {
        let g = mat_from(y, n);
        if unitarity_defect(&g) > tol / 10.0 {
            y.copy_from_slice(polar_unitary(&g).as_slice());
            true
        } else {
            false
        }
    }
}

/// Solves `∂_t G = i G H_int(χ_t X)`, `G(s, s, X) = I`, re-unitarizing by polar projection
/// whenever the defect exceeds `tol / 10`.
pub fn propagator_g(model: &Model, t: f64, s: f64, x: &PhaseVector, opts: &OdeOptions) -> Result<PropagatorState> {
    let n = model.spin_dim();
    model.h_int_symbol(x)?;
    let id = SpinMatrix::identity(n, n);
    let (y, log) = integrate(rhs(model, x, n), unitarize(n, opts.tol), s, t, id.as_slice(), opts)?;
    Ok(PropagatorState {
        t,
        s,
        g: mat_from(&y, n),
        log,
    })
}

/// `G(t_k, 0, X)` for several times.
pub fn propagator_g_dense(model: &Model, times: &[f64], x: &PhaseVector, opts: &OdeOptions) -> Result<(Vec<SpinMatrix>, OdeLog)> {
    let n = model.spin_dim();
    model.h_int_symbol(x)?;
    let id = SpinMatrix::identity(n, n);
    let (ys, log) = integrate_dense(rhs(model, x, n), unitarize(n, opts.tol), 0.0, times, id.as_slice(), opts)?;
    Ok((ys.iter().map(|y| mat_from(y, n)).collect(), log))
}
