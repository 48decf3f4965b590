use super::Model;
use crate::hierarchy::flow::chi_flow;
use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Quadratic form `Q_t(V) = V·A_Q V` on `R^{2D}` (flat `[q; p]` layout).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadFormQ {
    pub a_q: DMatrix<f64>,
    pub trace: f64,
    /// Number of Gauss–Legendre nodes used in the time integral.
    pub nodes: usize,
}

impl QuadFormQ {
    pub fn eval(&self, v: &[f64]) -> f64 {
        let x = nalgebra::DVector::from_column_slice(v);
        x.dot(&(&self.a_q * &x))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.a_q
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

fn assemble(model: &Model, t: f64, nodes: usize) -> DMatrix<f64> {
    let n2 = 2 * model.dim();
    let mut a = DMatrix::<f64>::zeros(n2, n2);
    if t == 0.0 {
        return a;
    }
    let (lo, hi) = if t > 0.0 { (0.0, t) } else { (t, 0.0) };
    let rule: Vec<(f64, f64)> = GaussLegendre::new(nodes)
        .expect("nodes >= 2")
        .as_node_weight_pairs()
        .to_vec();
    let pref = model.spin_dim() as f64 * t.abs();
    for (x, w) in rule {
        let s = 0.5 * (hi - lo) * x + 0.5 * (hi + lo);
        let ws = 0.5 * (hi - lo) * w * pref;
        for l in 0..model.n_spins() {
            for m in 0..3 {
                // gradient of V ↦ B·χ_s V is χ_{−s} B
                let v = nalgebra::DVector::from_vec(chi_flow(&model.grid, -s, model.b(l, m)).to_flat());
                a.ger(ws, &v, &v, 1.0);
            }
        }
    }
    a
}

/// Builds `A_Q` for `Q_t`, doubling the quadrature order until the trace settles to 1e-10.
///
/// Uses the unnormalized Hilbert–Schmidt pairing, so `|σ_m^{[λ]}|² = 2^N`.
/// For `t < 0` the integral runs over `[t, 0]` so that the form stays nonnegative.
pub fn q_form(model: &Model, t: f64) -> QuadFormQ {
    let mut nodes = 16;
    let mut a = assemble(model, t, nodes);
    loop {
        let next = assemble(model, t, 2 * nodes);
        let (t0, t1) = (a.trace(), next.trace());
        a = next;
        nodes *= 2;
        if (t1 - t0).abs() <= 1e-10 * t1.abs().max(1e-300) || nodes >= 1024 {
            break;
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    QuadFormQ {
        trace: a.trace(),
        a_q: a,
        nodes,
    }
}
