use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point `X = (q, p)` of the discretized phase space `R^{2D}`.
///
/// Also used for coupling vectors such as `B_{mx}` and `E_{mx}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

pub type CouplingVector = PhaseVector;

impl PhaseVector {
    pub fn zeros(d: usize) -> Self {
        Self {
            q: DVector::zeros(d),
            p: DVector::zeros(d),
        }
    }

    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have equal length");
        Self { q, p }
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(q), DVector::from_column_slice(p))
    }

    /// Unit vector along `q_j` (or `p_j` when `p_part`).
    pub fn basis(d: usize, j: usize, p_part: bool) -> Self {
        let mut v = Self::zeros(d);
        if p_part {
            v.p[j] = 1.0;
        } else {
            v.q[j] = 1.0;
        }
        v
    }

    /// Flat layout `[q; p]` of length `2D`.
    pub fn from_flat(x: &[f64]) -> Self {
        assert!(x.len() % 2 == 0);
        let d = x.len() / 2;
        Self::from_slices(&x[..d], &x[d..])
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.q.iter().chain(self.p.iter()).cloned().collect()
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.q.dot(&other.q) + self.p.dot(&other.p)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|x| x.is_finite())
    }

    /// `𝓕(q, p) = (−p, q)`, multiplication by `i` under `z = q + ip`.
    pub fn fcal(&self) -> Self {
        Self {
            q: -&self.p,
            p: self.q.clone(),
        }
    }

    /// Symplectic form `σ((x, ξ), (q, p)) = q·ξ − p·x`, equal to `U·𝓕V`.
    pub fn sigma(&self, other: &Self) -> f64 {
        other.q.dot(&self.p) - other.p.dot(&self.q)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            q: &self.q * s,
            p: &self.p * s,
        }
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.q.axpy(a, &x.q, 1.0);
        self.p.axpy(a, &x.p, 1.0);
    }
}

impl Add for &PhaseVector {
    type Output = PhaseVector;
    fn add(self, rhs: Self) -> PhaseVector {
        PhaseVector {
            q: &self.q + &rhs.q,
            p: &self.p + &rhs.p,
        }
    }
}

impl Sub for &PhaseVector {
    type Output = PhaseVector;
    fn sub(self, rhs: Self) -> PhaseVector {
        PhaseVector {
            q: &self.q - &rhs.q,
            p: &self.p - &rhs.p,
        }
    }
}

impl Neg for &PhaseVector {
    type Output = PhaseVector;
    fn neg(self) -> PhaseVector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &PhaseVector {
    type Output = PhaseVector;
    fn mul(self, s: f64) -> PhaseVector {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_equals_dot_with_fcal() {
        let u = PhaseVector::from_slices(&[1.0, -2.0], &[0.5, 3.0]);
        let v = PhaseVector::from_slices(&[0.3, 0.7], &[-1.1, 2.0]);
        assert!((u.sigma(&v) - u.dot(&v.fcal())).abs() < 1e-15);
        assert!((u.sigma(&v) + v.sigma(&u)).abs() < 1e-15);
    }

    #[test]
    fn fcal_squares_to_minus_identity() {
        let u = PhaseVector::from_slices(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(u.fcal().fcal(), -&u);
    }

    #[test]
    fn flat_round_trip() {
        let u = PhaseVector::from_slices(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(u.to_flat(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(PhaseVector::from_flat(&u.to_flat()), u);
    }
}
