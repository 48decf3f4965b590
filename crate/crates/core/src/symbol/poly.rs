use crate::error::{Error, Result};
use crate::linalg::{c, SpinMatrix};
use crate::model::PhaseVector;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::fmt::Debug;

/// Scalar or matrix payload of a symbol coefficient. Products keep operator order.
pub trait Coefficient: Clone + Debug + Send + Sync + 'static {
    fn zero(shape: usize) -> Self;
    fn from_scalar(s: C64, shape: usize) -> Self;
    fn shape(&self) -> usize;
    fn add_assign(&mut self, other: &Self);
    fn scale(&self, s: C64) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Largest entry modulus.
    fn max_abs(&self) -> f64;
}

impl Coefficient for C64 {
    fn zero(_: usize) -> Self {
        c(0.0)
    }
    fn from_scalar(s: C64, _: usize) -> Self {
        s
    }
    fn shape(&self) -> usize {
        1
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
}

impl Coefficient for SpinMatrix {
    fn zero(shape: usize) -> Self {
        SpinMatrix::zeros(shape, shape)
    }
    fn from_scalar(s: C64, shape: usize) -> Self {
        SpinMatrix::identity(shape, shape) * s
    }
    fn shape(&self) -> usize {
        self.nrows()
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Multi-index pair `(α, β)` for the monomial `(q+ip)^α (q−ip)^β`.
pub type Key = (Vec<u32>, Vec<u32>);

/// Polynomial symbol `F(q, p) = Σ a_{αβ} z^α z̄^β` with `z = q + ip`.
#[derive(Debug, Clone)]
pub struct PolySymbol<T: Coefficient> {
    d: usize,
    shape: usize,
    terms: BTreeMap<Key, T>,
}

pub type ScalarSymbol = PolySymbol<C64>;
pub type MatrixSymbol = PolySymbol<SpinMatrix>;

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl<T: Coefficient> PolySymbol<T> {
    pub fn zero(d: usize, shape: usize) -> Self {
        Self {
            d,
            shape,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, value: T) -> Self {
        let shape = value.shape();
        let mut s = Self::zero(d, shape);
        s.add_term(vec![0; d], vec![0; d], value);
        s
    }

    pub fn monomial(d: usize, alpha: Vec<u32>, beta: Vec<u32>, coeff: T) -> Self {
        assert_eq!(alpha.len(), d);
        assert_eq!(beta.len(), d);
        let shape = coeff.shape();
        let mut s = Self::zero(d, shape);
        s.add_term(alpha, beta, coeff);
        s
    }

    /// `coeff · (V·X)` with `V·X = Σ v_q q + v_p p`.
    pub fn linear(v: &PhaseVector, coeff: T) -> Self {
        let d = v.dim();
        let shape = coeff.shape();
        let mut s = Self::zero(d, shape);
        for j in 0..d {
            // v_q q + v_p p = ½(v_q − i v_p) z + ½(v_q + i v_p) z̄
            let cz = C64::new(v.q[j], -v.p[j]) * 0.5;
            let cb = C64::new(v.q[j], v.p[j]) * 0.5;
            let mut e = vec![0; d];
            e[j] = 1;
            if cz != c(0.0) {
                s.add_term(e.clone(), vec![0; d], coeff.scale(cz));
            }
            if cb != c(0.0) {
                s.add_term(vec![0; d], e, coeff.scale(cb));
            }
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> usize {
        self.shape
    }

    pub fn terms(&self) -> &BTreeMap<Key, T> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, alpha: Vec<u32>, beta: Vec<u32>, coeff: T) {
        debug_assert_eq!(alpha.len(), self.d);
        debug_assert_eq!(coeff.shape(), self.shape);
        match self.terms.get_mut(&(alpha.clone(), beta.clone())) {
            Some(v) => v.add_assign(&coeff),
            None => {
                self.terms.insert((alpha, beta), coeff);
            }
        }
    }

    pub fn coeff(&self, alpha: &[u32], beta: &[u32]) -> Option<&T> {
        self.terms.get(&(alpha.to_vec(), beta.to_vec()))
    }

    /// Drops coefficients with every entry below `tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, v| v.max_abs() > tol);
        self
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|(a, b)| (a.iter().sum::<u32>() + b.iter().sum::<u32>()) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        let mut out = self.clone();
        for ((a, b), v) in &other.terms {
            out.add_term(a.clone(), b.clone(), v.clone());
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            d: self.d,
            shape: self.shape,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v.scale(s))).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0)))
    }

    /// Pointwise product, `self` on the left.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        let mut out = Self::zero(self.d, self.shape.max(other.shape));
        for ((a1, b1), v1) in &self.terms {
            for ((a2, b2), v2) in &other.terms {
                let a: Vec<u32> = a1.iter().zip(a2).map(|(x, y)| x + y).collect();
                let b: Vec<u32> = b1.iter().zip(b2).map(|(x, y)| x + y).collect();
                out.add_term(a, b, v1.mul(v2));
            }
        }
        out
    }

    pub fn eval(&self, x: &PhaseVector) -> Result<T> {
        if x.dim() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: x.dim(),
            });
        }
        let z: Vec<C64> = (0..self.d).map(|j| C64::new(x.q[j], x.p[j])).collect();
        let mut acc = T::zero(self.shape);
        for ((a, b), v) in &self.terms {
            let mut m = c(1.0);
            for j in 0..self.d {
                if a[j] > 0 {
                    m *= z[j].powu(a[j]);
                }
                if b[j] > 0 {
                    m *= z[j].conj().powu(b[j]);
                }
            }
            acc.add_assign(&v.scale(m));
        }
        Ok(acc)
    }

    /// `∂_{z_j}` (`bar = false`) or `∂_{z̄_j}` (`bar = true`).
    pub fn d_z(&self, j: usize, bar: bool) -> Self {
        let mut out = Self::zero(self.d, self.shape);
        for ((a, b), v) in &self.terms {
            let e = if bar { b[j] } else { a[j] };
            if e == 0 {
                continue;
            }
            let (mut a2, mut b2) = (a.clone(), b.clone());
            if bar {
                b2[j] -= 1;
            } else {
                a2[j] -= 1;
            }
            out.add_term(a2, b2, v.scale(c(e as f64)));
        }
        out
    }

    /// `∂_z^γ` or `∂_{z̄}^γ` for a multi-index `γ`.
    pub fn d_z_multi(&self, gamma: &[u32], bar: bool) -> Self {
        let mut out = Self::zero(self.d, self.shape);
        'terms: for ((a, b), v) in &self.terms {
            let src = if bar { b } else { a };
            let mut f = 1.0;
            for j in 0..self.d {
                if src[j] < gamma[j] {
                    continue 'terms;
                }
                f *= factorial(src[j]) / factorial(src[j] - gamma[j]);
            }
            let (mut a2, mut b2) = (a.clone(), b.clone());
            let dst = if bar { &mut b2 } else { &mut a2 };
            for j in 0..self.d {
                dst[j] -= gamma[j];
            }
            out.add_term(a2, b2, v.scale(c(f)));
        }
        out
    }

    /// Real directional derivative `d/dε F(X + εV)` as a symbol.
    pub fn directional(&self, v: &PhaseVector) -> Self {
        let mut out = Self::zero(self.d, self.shape);
        for j in 0..self.d {
            let w = C64::new(v.q[j], v.p[j]);
            if w == c(0.0) {
                continue;
            }
            out = out.add(&self.d_z(j, false).scale(w));
            out = out.add(&self.d_z(j, true).scale(w.conj()));
        }
        out
    }

    /// `Δ = Σ_j ∂²_{q_j} + ∂²_{p_j} = 4 Σ_j ∂_{z_j} ∂_{z̄_j}`.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.d, self.shape);
        for ((a, b), v) in &self.terms {
            for j in 0..self.d {
                if a[j] > 0 && b[j] > 0 {
                    let (mut a2, mut b2) = (a.clone(), b.clone());
                    a2[j] -= 1;
                    b2[j] -= 1;
                    out.add_term(a2, b2, v.scale(c(4.0 * a[j] as f64 * b[j] as f64)));
                }
            }
        }
        out
    }

    /// Heat operator `e^{(h/2)Δ}` as a finite series; negative `h` gives the inverse.
    pub fn heat(&self, h: f64) -> Self {
        let mut out = self.clone();
        let mut term = self.clone();
        let mut m = 1u32;
        loop {
            term = term.laplacian().scale(c(h / 2.0 / m as f64));
            if term.is_empty() {
                break;
            }
            out = out.add(&term);
            m += 1;
        }
        out
    }

    /// `F(· + Y)`.
    pub fn translate(&self, y: &PhaseVector) -> Self {
        let d = self.d;
        let mut out = Self::zero(d, self.shape);
        for ((a, b), v) in &self.terms {
            let mut prod = Self::constant(d, v.clone());
            for j in 0..d {
                let w = C64::new(y.q[j], y.p[j]);
                let mut e = vec![0; d];
                e[j] = 1;
                let zj = ScalarSymbol::monomial(d, e.clone(), vec![0; d], c(1.0))
                    .add(&ScalarSymbol::constant(d, w));
                let zbj = ScalarSymbol::monomial(d, vec![0; d], e, c(1.0))
                    .add(&ScalarSymbol::constant(d, w.conj()));
                for _ in 0..a[j] {
                    prod = prod.mul_scalar_poly(&zj);
                }
                for _ in 0..b[j] {
                    prod = prod.mul_scalar_poly(&zbj);
                }
            }
            out = out.add(&prod);
        }
        out
    }

    /// Product with a scalar polynomial.
    pub fn mul_scalar_poly(&self, s: &ScalarSymbol) -> Self {
        let mut out = Self::zero(self.d, self.shape);
        for ((a1, b1), v1) in &self.terms {
            for ((a2, b2), v2) in s.terms() {
                let a: Vec<u32> = a1.iter().zip(a2).map(|(x, y)| x + y).collect();
                let b: Vec<u32> = b1.iter().zip(b2).map(|(x, y)| x + y).collect();
                out.add_term(a, b, v1.scale(*v2));
            }
        }
        out
    }

    /// Largest coefficient difference (keys missing on one side count fully).
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .terms
            .values()
            .map(|v| v.max_abs())
            .fold(0.0, f64::max)
    }

    pub fn map_coeffs<U: Coefficient>(&self, shape: usize, f: impl Fn(&T) -> U) -> PolySymbol<U> {
        PolySymbol {
            d: self.d,
            shape,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }
}

impl ScalarSymbol {
    /// `q_j`.
    pub fn q(d: usize, j: usize) -> Self {
        Self::linear(&PhaseVector::basis(d, j, false), c(1.0))
    }

    /// `p_j`.
    pub fn p(d: usize, j: usize) -> Self {
        Self::linear(&PhaseVector::basis(d, j, true), c(1.0))
    }

    /// Matrix-valued copy `F · I_n`.
    pub fn times_identity(&self, n: usize) -> MatrixSymbol {
        self.map_coeffs(n, |v| SpinMatrix::identity(n, n) * *v)
    }

    /// Symbol from raw `q^a p^b` monomials.
    pub fn from_qp(d: usize, raw: &RawPoly) -> Self {
        let mut out = Self::zero(d, 1);
        for ((a, b), v) in raw {
            let mut prod = Self::constant(d, *v);
            for j in 0..d {
                for _ in 0..a[j] {
                    prod = prod.mul(&Self::q(d, j));
                }
                for _ in 0..b[j] {
                    prod = prod.mul(&Self::p(d, j));
                }
            }
            out = out.add(&prod);
        }
        out.pruned(0.0)
    }

    /// Raw `q^a p^b` expansion.
    pub fn to_qp(&self) -> RawPoly {
        let d = self.d;
        let mut out = RawPoly::new();
        for ((a, b), v) in self.terms() {
            let mut prod: RawPoly = BTreeMap::from([((vec![0; d], vec![0; d]), *v)]);
            for j in 0..d {
                let mut e = vec![0; d];
                e[j] = 1;
                let z: RawPoly = BTreeMap::from([
                    ((e.clone(), vec![0; d]), c(1.0)),
                    ((vec![0; d], e.clone()), C64::new(0.0, 1.0)),
                ]);
                let zb: RawPoly = BTreeMap::from([
                    ((e.clone(), vec![0; d]), c(1.0)),
                    ((vec![0; d], e), C64::new(0.0, -1.0)),
                ]);
                for _ in 0..a[j] {
                    prod = raw_mul(&prod, &z);
                }
                for _ in 0..b[j] {
                    prod = raw_mul(&prod, &zb);
                }
            }
            for (k, v) in prod {
                *out.entry(k).or_insert(c(0.0)) += v;
            }
        }
        out.retain(|_, v| v.norm() > 0.0);
        out
    }
}

/// Polynomial in raw real variables: `(a, b) ↦` coefficient of `q^a p^b`.
pub type RawPoly = BTreeMap<Key, C64>;

pub fn raw_mul(x: &RawPoly, y: &RawPoly) -> RawPoly {
    let mut out = RawPoly::new();
    for ((a1, b1), v1) in x {
        for ((a2, b2), v2) in y {
            let a: Vec<u32> = a1.iter().zip(a2).map(|(p, q)| p + q).collect();
            let b: Vec<u32> = b1.iter().zip(b2).map(|(p, q)| p + q).collect();
            *out.entry((a, b)).or_insert(c(0.0)) += v1 * v2;
        }
    }
    out
}

/// All multi-indices of length `d` with total degree exactly `k`.
pub fn multi_indices(d: usize, k: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if d == 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=k).rev() {
            prefix.push(first);
            rec(d - 1, k - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    rec(d, k, &mut Vec::with_capacity(d), &mut out);
    out
}

pub fn multi_factorial(a: &[u32]) -> f64 {
    a.iter().map(|&x| factorial(x)).product()
}
