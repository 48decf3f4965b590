//! Small dense complex matrices used for spin-space values.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// An operator on the spin space `(C^2)^{⊗N}`.
pub type SpinMatrix = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> SpinMatrix {
    SpinMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> SpinMatrix {
    SpinMatrix::zeros(n, n)
}

pub fn commutator(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a * b + b * a
}

/// Largest singular value.
pub fn op_norm(a: &SpinMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let g = a.adjoint() * a;
    let eig = g.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt()
}

pub fn frobenius(a: &SpinMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus.
pub fn max_abs(a: &SpinMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖A − A*‖_F`.
pub fn hermiticity_defect(a: &SpinMatrix) -> f64 {
    frobenius(&(a - a.adjoint()))
}

/// `‖G*G − I‖_F`.
pub fn unitarity_defect(g: &SpinMatrix) -> f64 {
    let n = g.nrows();
    frobenius(&(g.adjoint() * g - identity(n)))
}

/// Nearest unitary matrix in Frobenius norm, `G (G*G)^{-1/2}`.
pub fn polar_unitary(g: &SpinMatrix) -> SpinMatrix {
    let eig = (g.adjoint() * g).symmetric_eigen();
    let inv_sqrt = SpinMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| c(1.0 / l.max(f64::MIN_POSITIVE).sqrt())),
    );
    let v = &eig.eigenvectors;
    g * v * inv_sqrt * v.adjoint()
}

/// `exp(i t A)` for Hermitian `A`, through its eigendecomposition.
pub fn exp_i_hermitian(a: &SpinMatrix, t: f64) -> SpinMatrix {
    let herm = (a + a.adjoint()) * c(0.5);
    let eig = herm.symmetric_eigen();
    let phases =
        SpinMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l * t)));
    let v = &eig.eigenvectors;
    v * phases * v.adjoint()
}

/// Relative deviation `‖a − b‖ / max(‖b‖, floor)` in operator norm.
pub fn rel_dev(a: &SpinMatrix, b: &SpinMatrix, floor: f64) -> f64 {
    op_norm(&(a - b)) / op_norm(b).max(floor)
}

/// `exp(L) v` by scaled Taylor series, where `op(x, y)` writes `y = L x`.
///
/// `norm_bound` is any upper estimate of `‖L‖`; it sets the number of substeps.
pub fn expm_apply<F>(mut op: F, v: &[C64], norm_bound: f64) -> Vec<C64>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let steps = (norm_bound / 0.5).ceil().max(1.0) as usize;
    let n = v.len();
    let mut out = v.to_vec();
    let mut term = vec![c(0.0); n];
    let mut next = vec![c(0.0); n];
    for _ in 0..steps {
        term.copy_from_slice(&out);
        for k in 1..80 {
            op(&term, &mut next);
            let f = 1.0 / (steps as f64 * k as f64);
            let mut tn = 0.0f64;
            for i in 0..n {
                term[i] = next[i] * f;
                out[i] += term[i];
                tn = tn.max(term[i].norm());
            }
            let on = out.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if tn <= 1e-17 * on.max(1e-300) {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_projection_restores_unitarity() {
        let mut g = exp_i_hermitian(
            &SpinMatrix::from_row_slice(2, 2, &[c(1.0), C64::new(0.3, 0.2), C64::new(0.3, -0.2), c(-0.5)]),
            0.7,
        );
        g[(0, 0)] += c(1e-4);
        assert!(unitarity_defect(&g) > 1e-5);
        let u = polar_unitary(&g);
        assert!(unitarity_defect(&u) < 1e-13);
        assert!(frobenius(&(u - g)) < 2e-4);
    }

    #[test]
    fn expm_apply_matches_eigen_route() {
        let a = SpinMatrix::from_row_slice(2, 2, &[c(0.3), C64::new(1.0, -0.4), C64::new(1.0, 0.4), c(-2.0)]);
        let v = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let l = &a * (I * 3.0);
        let got = expm_apply(
            |x, y| {
                y[0] = l[(0, 0)] * x[0] + l[(0, 1)] * x[1];
                y[1] = l[(1, 0)] * x[0] + l[(1, 1)] * x[1];
            },
            &v,
            op_norm(&l),
        );
        let u = exp_i_hermitian(&a, 3.0);
        let want = &u * nalgebra::DVector::from_column_slice(&v);
        assert!((got[0] - want[0]).norm() < 1e-13 && (got[1] - want[1]).norm() < 1e-13);
    }

    #[test]
    fn op_norm_of_pauli_is_one() {
        let s2 = SpinMatrix::from_row_slice(2, 2, &[c(0.0), -I, I, c(0.0)]);
        assert!((op_norm(&s2) - 1.0).abs() < 1e-14);
    }
}
