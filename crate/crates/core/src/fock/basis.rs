use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::HashMap;

/// Occupation-number basis `{α : |α| ≤ n_max}` in graded lexicographic order.
///
/// Within each total degree, multi-indices are ordered lexicographically with
/// the largest first entry first, e.g. `(2,0), (1,1), (0,2)`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    d: usize,
    n_max: usize,
    states: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
}

pub const BASIS_ORDER_VERSION: &str = "graded-lex-desc/1";

fn compositions(n: usize, d: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if d == 1 {
        prefix.push(n as u16);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=n).rev() {
        prefix.push(first as u16);
        compositions(n - first, d - 1, prefix, out);
        prefix.pop();
    }
}

/// `C(n, k)` as `f64`-safe integer arithmetic.
pub fn binomial(n: usize, k: usize) -> usize {
    assert!(k <= n);
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

impl FockBasis {
    pub fn new(d: usize, n_max: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("Fock basis needs at least one mode".into()));
        }
        if n_max > u16::MAX as usize {
            return Err(Error::Config("photon cutoff too large".into()));
        }
        let mut states = Vec::with_capacity(binomial(d + n_max, d));
        let mut prefix = Vec::with_capacity(d);
        for n in 0..=n_max {
            compositions(n, d, &mut prefix, &mut states);
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            d,
            n_max,
            states,
            index,
        })
    }

    pub fn modes(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u16>] {
        &self.states
    }

    pub fn index_of(&self, alpha: &[u16]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    pub fn total(&self, i: usize) -> usize {
        self.states[i].iter().map(|&a| a as usize).sum()
    }

    pub fn dump(&self) -> BasisDump {
        BasisDump {
            order: BASIS_ORDER_VERSION.into(),
            modes: self.d,
            n_max: self.n_max,
            states: self.states.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisDump {
    pub order: String,
    pub modes: usize,
    pub n_max: usize,
    pub states: Vec<Vec<u16>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formula() {
        for (d, n) in [(1, 5), (2, 5), (3, 4), (4, 3), (2, 30)] {
            let b = FockBasis::new(d, n).unwrap();
            assert_eq!(b.dim(), binomial(d + n, d));
        }
    }

    #[test]
    fn graded_lex_order() {
        let b = FockBasis::new(2, 2).unwrap();
        let expect: Vec<Vec<u16>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(b.states(), expect.as_slice());
        for (i, s) in expect.iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
        }
        assert_eq!(b.index_of(&[3, 0]), None);
    }

    #[test]
    fn complete_and_duplicate_free() {
        let b = FockBasis::new(3, 4).unwrap();
        let mut seen = std::collections::HashSet::new();
        for s in b.states() {
            assert!(s.iter().map(|&x| x as usize).sum::<usize>() <= 4);
            assert!(seen.insert(s.clone()));
        }
    }
}
