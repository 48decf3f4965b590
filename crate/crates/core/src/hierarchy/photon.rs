use super::bloch::{first_order, FirstOrder};
use super::flow::FlowCache;
use crate::error::{Error, Result};
use crate::linalg::{anticommutator, c, SpinMatrix};
use crate::model::{Model, PhaseVector};
use crate::ode::OdeOptions;

/// Coefficients of the photon-number rate `N'(t) = −Σ_{λ,m} Φ_{S,h}(𝓕B_{m x_λ}) ⊗ σ_m^{[λ]}` evolved.
#[derive(Debug, Clone)]
pub struct PhotonRateExpansion {
    pub t: f64,
    pub orders: Vec<SpinMatrix>,
}

/// `N^[0]` and (for `m_max = 1`) `N^[1]`, assembled from the Maxwell–Bloch
/// first-order state via the product rule for symbols of commuting factors:
/// `N^[1] = −Σ (E^{pol,0} S^1 + ½{E^{pol,1}, S^0} + ½ dS^0(∇E^{pol,0}))`.
pub fn photon_rate_expansion(model: &Model, t: f64, x: &PhaseVector, m_max: usize, opts: &OdeOptions) -> Result<PhotonRateExpansion> {
    if m_max > 1 {
        return Err(Error::Missing(format!(
            "photon-rate coefficients are assembled up to order 1, requested {m_max}"
        )));
    }
    let fo = first_order(model, t, x, opts)?;
    Ok(PhotonRateExpansion {
        t,
        orders: photon_rate_from(model, &fo)[..=m_max].to_vec(),
    })
}

/// `[N^[0], N^[1]]` from a precomputed first-order state.
pub fn photon_rate_from(model: &Model, fo: &FirstOrder) -> Vec<SpinMatrix> {
    let n = model.spin_dim();
    let flow = FlowCache::new(&model.grid, fo.t);
    let back = FlowCache::new(&model.grid, -fo.t);
    let xt = flow.apply(&fo.x);
    let mut n0 = SpinMatrix::zeros(n, n);
    let mut n1 = SpinMatrix::zeros(n, n);
    for lam in 0..model.n_spins() {
        for m in 0..3 {
            let epol = model.b(lam, m).fcal();
            let e0 = epol.dot(&xt);
            n0 -= &fo.s0[lam][m] * c(e0);
            let e1 = fo.field1(&epol);
            let grad = back.apply(&epol);
            n1 -= &fo.s1[lam][m] * c(e0);
            n1 -= anticommutator(&e1, &fo.s0[lam][m]) * c(0.5);
            n1 -= fo.ds0_along(lam, m, &grad) * c(0.5);
        }
    }
    vec![n0, n1]
}

/// `Σ_{λ,m} (E_{m x_λ}·χ_t X) S_m^{[λ,0]}`: the free electric field paired with the Bloch spins.
pub fn free_e_dot_s(model: &Model, fo: &FirstOrder) -> Result<SpinMatrix> {
    let n = model.spin_dim();
    let xt = FlowCache::new(&model.grid, fo.t).apply(&fo.x);
    let mut out = SpinMatrix::zeros(n, n);
    for lam in 0..model.n_spins() {
        for m in 0..3 {
            let e = model.coupling_e(m, &model.positions[lam])?;
            out += &fo.s0[lam][m] * c(e.dot(&xt));
        }
    }
    Ok(out)
}
