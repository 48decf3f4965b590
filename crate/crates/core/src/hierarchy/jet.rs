use crate::linalg::SpinMatrix;
use std::collections::HashMap;

/// Monomials `z^α z̄^β` in `r` complex reduced coordinates up to a total degree,
/// ordered by degree so that lower-degree truncations are prefixes.
#[derive(Debug, Clone)]
pub struct JetSpace {
    r: usize,
    cap: usize,
    monomials: Vec<Vec<u8>>,
    /// `up[i][v]`: index of `monomial_i · w_v`, if within the cap.
    up: Vec<Vec<Option<usize>>>,
    /// `ends[d]`: number of monomials of degree `≤ d`.
    ends: Vec<usize>,
}

/// Variable index of `z_k`.
pub fn zvar(k: usize) -> usize {
    2 * k
}

/// Variable index of `z̄_k`.
pub fn zbvar(k: usize) -> usize {
    2 * k + 1
}

impl JetSpace {
    pub fn new(r: usize, cap: usize) -> Self {
        let nvar = 2 * r;
        let mut monomials: Vec<Vec<u8>> = vec![vec![0; nvar]];
        let mut ends = vec![1];
        let mut frontier = vec![vec![0u8; nvar]];
        for _ in 1..=cap {
            let mut next: Vec<Vec<u8>> = Vec::new();
            for m in &frontier {
                // extend only at or after the last nonzero variable, so each monomial appears once
                let last = m.iter().rposition(|&e| e > 0).unwrap_or(0);
                for v in last..nvar {
                    let mut n = m.clone();
                    n[v] += 1;
                    next.push(n);
                }
            }
            monomials.extend(next.iter().cloned());
            ends.push(monomials.len());
            frontier = next;
        }
        let index: HashMap<Vec<u8>, usize> = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let up = monomials
            .iter()
            .map(|m| {
                (0..nvar)
                    .map(|v| {
                        let mut n = m.clone();
                        n[v] += 1;
                        index.get(&n).copied()
                    })
                    .collect()
            })
            .collect();
        Self {
            r,
            cap,
            monomials,
            up,
            ends,
        }
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Number of monomials of degree `≤ deg`.
    pub fn len(&self, deg: usize) -> usize {
        self.ends[deg.min(self.cap)]
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monomials[i]
    }

    pub fn up(&self, i: usize, v: usize) -> Option<usize> {
        self.up[i][v]
    }

    /// `∂_{w_v} a`, with `a` of degree `≤ deg` and the result of degree `≤ deg − 1`.
    pub fn deriv(&self, a: &[SpinMatrix], deg: usize, v: usize) -> Vec<SpinMatrix> {
        let n = a[0].nrows();
        let out_len = if deg == 0 { 0 } else { self.len(deg - 1) };
        (0..out_len)
            .map(|i| match self.up[i][v] {
                Some(j) if j < a.len() => &a[j] * crate::linalg::c(self.monomials[i][v] as f64 + 1.0),
                _ => SpinMatrix::zeros(n, n),
            })
            .collect()
    }

    /// Adds `w_v · (L a)` (left) or `w_v · (a L)` (right) to `out`, truncated at `out.len()`.
    pub fn add_linear_product(&self, out: &mut [SpinMatrix], a: &[SpinMatrix], v: usize, l: &SpinMatrix, left: bool) {
        for (i, ai) in a.iter().enumerate() {
            if let Some(j) = self.up[i][v] {
                if j < out.len() {
                    if left {
                        out[j] += l * ai;
                    } else {
                        out[j] += ai * l;
                    }
                }
            }
        }
    }
}
