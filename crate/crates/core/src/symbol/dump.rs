use super::poly::{Coefficient, PolySymbol};
use crate::linalg::SpinMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const SYMBOL_DUMP_VERSION: &str = "poly-symbol/1";

/// One stored monomial: scalar records carry `re`/`im`, matrix records carry `matrix`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermRecord {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub im: Option<f64>,
    /// Row-major `[re, im]` pairs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SymbolDump {
    pub version: String,
    pub modes: usize,
    pub shape: usize,
    pub terms: Vec<TermRecord>,
}

pub trait DumpCoefficient: Coefficient {
    fn record(&self, alpha: Vec<u32>, beta: Vec<u32>) -> TermRecord;
}

impl DumpCoefficient for C64 {
    fn record(&self, alpha: Vec<u32>, beta: Vec<u32>) -> TermRecord {
        TermRecord {
            alpha,
            beta,
            re: Some(self.re),
            im: Some(self.im),
            matrix: None,
        }
    }
}

impl DumpCoefficient for SpinMatrix {
    fn record(&self, alpha: Vec<u32>, beta: Vec<u32>) -> TermRecord {
        let rows = (0..self.nrows())
            .map(|r| (0..self.ncols()).map(|k| [self[(r, k)].re, self[(r, k)].im]).collect())
            .collect();
        TermRecord {
            alpha,
            beta,
            re: None,
            im: None,
            matrix: Some(rows),
        }
    }
}

impl<T: DumpCoefficient> PolySymbol<T> {
    pub fn dump(&self) -> SymbolDump {
        SymbolDump {
            version: SYMBOL_DUMP_VERSION.to_string(),
            modes: self.dim(),
            shape: self.shape(),
            terms: self
                .terms()
                .iter()
                .map(|((a, b), v)| v.record(a.clone(), b.clone()))
                .collect(),
        }
    }
}
