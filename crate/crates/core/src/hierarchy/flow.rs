use crate::model::{ModeGrid, PhaseVector};

/// Free flow `χ_t`: per mode `q ↦ cos(ωt) q + sin(ωt) p`, `p ↦ −sin(ωt) q + cos(ωt) p`.
pub fn chi_flow(grid: &ModeGrid, t: f64, x: &PhaseVector) -> PhaseVector {
    let mut out = x.clone();
    for j in 0..x.dim() {
        let (s, c) = (grid.mode_omega(j) * t).sin_cos();
        out.q[j] = c * x.q[j] + s * x.p[j];
        out.p[j] = -s * x.q[j] + c * x.p[j];
    }
    out
}

/// Cached per-mode rotation angles for repeated application at a fixed time.
#[derive(Debug, Clone)]
pub struct FlowCache {
    pub t: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FlowCache {
    pub fn new(grid: &ModeGrid, t: f64) -> Self {
        let (sin, cos) = (0..grid.dim())
            .map(|j| (grid.mode_omega(j) * t).sin_cos())
            .unzip();
        Self { t, cos, sin }
    }

    pub fn apply(&self, x: &PhaseVector) -> PhaseVector {
        let mut out = x.clone();
        for j in 0..x.dim() {
            out.q[j] = self.cos[j] * x.q[j] + self.sin[j] * x.p[j];
            out.p[j] = -self.sin[j] * x.q[j] + self.cos[j] * x.p[j];
        }
        out
    }
}
