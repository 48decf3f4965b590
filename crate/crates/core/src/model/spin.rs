use crate::error::{Error, Result};
use crate::linalg::{c, identity, SpinMatrix, I};
use num_complex::Complex64 as C64;

/// Pauli matrix `σ_m`, `m ∈ {0, 1, 2}` for x, y, z.
pub fn pauli(m: usize) -> SpinMatrix {
    let z = c(0.0);
    match m {
        0 => SpinMatrix::from_row_slice(2, 2, &[z, c(1.0), c(1.0), z]),
        1 => SpinMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        2 => SpinMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c(-1.0)]),
        _ => panic!("Pauli index {m} out of range"),
    }
}

pub fn kron(a: &SpinMatrix, b: &SpinMatrix) -> SpinMatrix {
    a.kronecker(b)
}

/// `I ⊗ … ⊗ σ_m ⊗ … ⊗ I` with `σ_m` in slot `lambda` (0-based, leftmost factor first).
pub fn spin_operator(n: usize, lambda: usize, m: usize) -> Result<SpinMatrix> {
    if n == 0 || lambda >= n {
        return Err(Error::Index {
            what: "spin index",
            value: lambda,
            lo: 0,
            hi: n.saturating_sub(1),
        });
    }
    if m >= 3 {
        return Err(Error::Index {
            what: "axis",
            value: m,
            lo: 0,
            hi: 2,
        });
    }
    let mut out = SpinMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for slot in 0..n {
        let f = if slot == lambda { pauli(m) } else { identity(2) };
        out = kron(&out, &f);
    }
    Ok(out)
}

/// All `σ_m^{[λ]}`, indexed `[λ][m]`.
pub fn spin_family(n: usize) -> Vec<[SpinMatrix; 3]> {
    (0..n)
        .map(|l| std::array::from_fn(|m| spin_operator(n, l, m).expect("valid indices")))
        .collect()
}

/// Levi-Civita symbol on 0-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, frobenius};

    #[test]
    fn sigma_z_single_spin() {
        let s = spin_operator(1, 0, 2).unwrap();
        assert_eq!(s[(0, 0)], c(1.0));
        assert_eq!(s[(1, 1)], c(-1.0));
        assert_eq!(s[(0, 1)], c(0.0));
    }

    #[test]
    fn different_sites_commute_and_square_to_identity() {
        let fam = spin_family(3);
        for l in 0..3 {
            for m in 0..3 {
                let s = &fam[l][m];
                assert!(frobenius(&(s * s - identity(8))) < 1e-15);
                assert!(frobenius(&(s - s.adjoint())) < 1e-15);
                for mu in 0..3 {
                    if mu == l {
                        continue;
                    }
                    for j in 0..3 {
                        assert!(frobenius(&commutator(s, &fam[mu][j])) < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn pauli_algebra() {
        // [σ_1, σ_2] = 2i σ_3 and cyclic
        for (a, b, cc) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let lhs = commutator(&pauli(a), &pauli(b));
            assert!(frobenius(&(lhs - pauli(cc) * (I * 2.0))) < 1e-15);
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(spin_operator(2, 2, 0).is_err());
        assert!(spin_operator(2, 0, 3).is_err());
    }
}
