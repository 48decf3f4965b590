use super::poly::{multi_factorial, multi_indices, Coefficient, PolySymbol};
use crate::linalg::c;

/// `C^k(F, G) = Σ_{|γ|=k} (2^k / γ!) ∂_z^γ F · ∂_{z̄}^γ G`, `F` on the left.
pub fn c_k<T: Coefficient>(f: &PolySymbol<T>, g: &PolySymbol<T>, k: u32) -> PolySymbol<T> {
    let d = f.dim();
    let mut out = PolySymbol::zero(d, f.shape().max(g.shape()));
    for gamma in multi_indices(d, k) {
        let df = f.d_z_multi(&gamma, false);
        if df.is_empty() {
            continue;
        }
        let dg = g.d_z_multi(&gamma, true);
        if dg.is_empty() {
            continue;
        }
        let w = 2f64.powi(k as i32) / multi_factorial(&gamma);
        out = out.add(&df.mul(&dg).scale(c(w)));
    }
    out
}

/// Wick symbol of `Op(F) Op(G)`: `Σ_k h^k C^k(F, G)`, a finite sum on polynomials.
pub fn mizrahi_compose<T: Coefficient>(f: &PolySymbol<T>, g: &PolySymbol<T>, h: f64) -> PolySymbol<T> {
    mizrahi_partial(f, g, h, f.degree().min(g.degree()) as u32)
}

/// Series truncated after the `h^m` term.
pub fn mizrahi_partial<T: Coefficient>(f: &PolySymbol<T>, g: &PolySymbol<T>, h: f64, m: u32) -> PolySymbol<T> {
    let mut out = f.mul(g);
    for k in 1..=m {
        let ck = c_k(f, g, k);
        if !ck.is_empty() {
            out = out.add(&ck.scale(c(h.powi(k as i32))));
        }
    }
    out
}

/// Surrogate weighted norm `max_{γ,γ'} |(2∂_z)^γ (2∂_{z̄})^{γ'} F(0)| / a^{(|γ|+|γ'|)/2}`
/// for the isotropic form `A = a·I`. Only derivatives up to the degree exist, so the
/// maximum is over finitely many terms; this stands in for the full symbol-class norm.
pub fn surrogate_norm<T: Coefficient>(f: &PolySymbol<T>, a: f64) -> f64 {
    f.terms()
        .iter()
        .map(|((al, be), v)| {
            let m = al.iter().sum::<u32>() + be.iter().sum::<u32>();
            v.max_abs() * multi_factorial(al) * multi_factorial(be) * 2f64.powi(m as i32)
                / a.powf(m as f64 / 2.0)
        })
        .fold(0.0, f64::max)
}

/// Upper bound `‖F‖‖G‖ (h Tr A)^{m+1} e^{h Tr A}` on the tail of the composition series at
/// `X = 0`, with `Tr A = 2 D a` and surrogate norms.
pub fn mizrahi_remainder_bound<T: Coefficient>(f: &PolySymbol<T>, g: &PolySymbol<T>, h: f64, m: u32, a: f64) -> f64 {
    let tr = 2.0 * f.dim() as f64 * a;
    surrogate_norm(f, a) * surrogate_norm(g, a) * (h * tr).powi(m as i32 + 1) * (h * tr).exp()
}
