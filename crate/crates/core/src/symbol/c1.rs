use super::poly::MatrixSymbol;
use crate::error::{Error, Result};
use crate::linalg::{c, SpinMatrix, I};
use crate::model::{Model, PhaseVector};

/// A matrix-valued symbol known through its value and real directional derivatives.
pub trait DifferentiableSymbol {
    fn value(&self, x: &PhaseVector) -> Result<SpinMatrix>;
    /// `d/dε G(X + εV)` at `ε = 0`.
    fn derivative(&self, x: &PhaseVector, v: &PhaseVector) -> Result<SpinMatrix>;
}

impl DifferentiableSymbol for MatrixSymbol {
    fn value(&self, x: &PhaseVector) -> Result<SpinMatrix> {
        self.eval(x)
    }
    fn derivative(&self, x: &PhaseVector, v: &PhaseVector) -> Result<SpinMatrix> {
        self.directional(v).eval(x)
    }
}

/// Callback-backed symbol.
pub struct FnSymbol<V, D> {
    pub value: V,
    pub derivative: D,
}

impl<V, D> DifferentiableSymbol for FnSymbol<V, D>
where
    V: Fn(&PhaseVector) -> Result<SpinMatrix>,
    D: Fn(&PhaseVector, &PhaseVector) -> Result<SpinMatrix>,
{
    fn value(&self, x: &PhaseVector) -> Result<SpinMatrix> {
        (self.value)(x)
    }
    fn derivative(&self, x: &PhaseVector, v: &PhaseVector) -> Result<SpinMatrix> {
        (self.derivative)(x, v)
    }
}

/// `F(X) = F_0 + Σ_k (v_k · X) M_k`.
#[derive(Debug, Clone)]
pub struct AffineSymbol {
    pub constant: SpinMatrix,
    pub terms: Vec<(PhaseVector, SpinMatrix)>,
}

impl AffineSymbol {
    pub fn new(constant: SpinMatrix) -> Self {
        Self {
            constant,
            terms: Vec::new(),
        }
    }

    pub fn with_term(mut self, v: PhaseVector, m: SpinMatrix) -> Self {
        self.terms.push((v, m));
        self
    }

    /// The interaction symbol `Σ_{λ,m} (β_m + B_{mλ}·X) σ_m^λ`.
    pub fn h_int(model: &Model) -> Self {
        let n = model.spin_dim();
        let mut c0 = SpinMatrix::zeros(n, n);
        let mut terms = Vec::new();
        for lam in 0..model.n_spins() {
            for m in 0..3 {
                c0 += model.sigma(lam, m) * c(model.beta[m]);
                terms.push((model.b(lam, m).clone(), model.sigma(lam, m).clone()));
            }
        }
        Self { constant: c0, terms }
    }

    pub fn to_poly(&self, d: usize) -> MatrixSymbol {
        let mut out = MatrixSymbol::constant(d, self.constant.clone());
        for (v, m) in &self.terms {
            out = out.add(&MatrixSymbol::linear(v, m.clone()));
        }
        out
    }
}

impl DifferentiableSymbol for AffineSymbol {
    fn value(&self, x: &PhaseVector) -> Result<SpinMatrix> {
        let mut out = self.constant.clone();
        for (v, m) in &self.terms {
            if v.dim() != x.dim() {
                return Err(Error::Dimension {
                    expected: v.dim(),
                    got: x.dim(),
                });
            }
            out += m * c(v.dot(x));
        }
        Ok(out)
    }
    fn derivative(&self, _x: &PhaseVector, w: &PhaseVector) -> Result<SpinMatrix> {
        self.value(w).map(|v| v - &self.constant)
    }
}

/// `C¹(F, G)(X)` for affine `F`:
/// `½ Σ_j (∂_{q_j} − i∂_{p_j})F · (∂_{q_j} + i∂_{p_j})G = ½ Σ_k M_k [dG(v_k) + i dG(𝓕v_k)]`.
pub fn c1_cross_left(f: &AffineSymbol, g: &dyn DifferentiableSymbol, x: &PhaseVector) -> Result<SpinMatrix> {
    let mut out = SpinMatrix::zeros(f.constant.nrows(), f.constant.ncols());
    for (v, m) in &f.terms {
        let dg = g.derivative(x, v)? + g.derivative(x, &v.fcal())? * I;
        out += m * dg * c(0.5);
    }
    Ok(out)
}

/// `C¹(G, F)(X)` for affine `F`: `½ Σ_k [dG(v_k) − i dG(𝓕v_k)] M_k`.
pub fn c1_cross_right(g: &dyn DifferentiableSymbol, f: &AffineSymbol, x: &PhaseVector) -> Result<SpinMatrix> {
    let mut out = SpinMatrix::zeros(f.constant.nrows(), f.constant.ncols());
    for (v, m) in &f.terms {
        let dg = g.derivative(x, v)? - g.derivative(x, &v.fcal())? * I;
        out += dg * m * c(0.5);
    }
    Ok(out)
}

/// Alias for the left form, the one used by the hierarchy.
pub fn c1_cross(f: &AffineSymbol, g: &dyn DifferentiableSymbol, x: &PhaseVector) -> Result<SpinMatrix> {
    c1_cross_left(f, g, x)
}
