use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One measured quantity compared against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Acceptance criterion this check belongs to, if any.
    pub criterion: Option<u8>,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `measured ≤ threshold` (NaN fails).
    pub fn at_most(name: impl Into<String>, criterion: Option<u8>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            criterion,
            measured,
            threshold,
            pass: measured <= threshold,
            detail: None,
        }
    }

    /// Passes when `measured ≥ threshold`.
    pub fn at_least(name: impl Into<String>, criterion: Option<u8>, measured: f64, threshold: f64) -> Self {
        Self {
            pass: measured >= threshold,
            ..Self::at_most(name, criterion, measured, threshold)
        }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let crit = self.criterion.map(|c| format!("[{c}] ")).unwrap_or_default();
        let mut s = format!("{tag} {crit}{}: measured {:.3e}, threshold {:.3e}", self.name, self.measured, self.threshold);
        if let Some(d) = &self.detail {
            s.push_str(" (");
            s.push_str(d);
            s.push(')');
        }
        s
    }
}

/// Sorted list of checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckList(pub Vec<Check>);

impl CheckList {
    pub fn push(&mut self, c: Check) {
        self.0.push(c);
    }

    pub fn extend(&mut self, other: CheckList) {
        self.0.extend(other.0);
    }

    pub fn sort(&mut self) {
        self.0.sort_by(|a, b| (a.criterion, &a.name).cmp(&(b.criterion, &b.name)));
    }

    /// True iff every check tagged with an acceptance criterion passes.
    pub fn acceptance_pass(&self) -> bool {
        self.0.iter().filter(|c| c.criterion.is_some()).all(|c| c.pass)
    }

    pub fn criterion_pass(&self, k: u8) -> Option<bool> {
        let mut it = self.0.iter().filter(|c| c.criterion == Some(k)).peekable();
        it.peek()?;
        Some(it.all(|c| c.pass))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Check> {
        self.0.iter()
    }
}

/// One CSV row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub observable: String,
    pub t: f64,
    #[serde(rename = "X_id")]
    pub x_id: String,
    pub h: Option<f64>,
    pub error: Option<f64>,
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    pub status: String,
}

pub fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_and_acceptance() {
        let mut l = CheckList::default();
        l.push(Check::at_most("b", Some(2), 1e-12, 1e-10));
        l.push(Check::at_least("a", Some(1), 0.5, 0.8));
        l.push(Check::at_most("diag", None, 1.0, 0.0));
        l.sort();
        assert_eq!(l.0[0].name, "diag");
        assert_eq!(l.criterion_pass(2), Some(true));
        assert_eq!(l.criterion_pass(1), Some(false));
        assert_eq!(l.criterion_pass(7), None);
        assert!(!l.acceptance_pass());
        assert!(!Check::at_most("nan", None, f64::NAN, 1.0).pass);
        assert!(l.0[1].line().starts_with("FAIL [1] a"));
    }

    #[test]
    fn csv_header_and_empty_cells() {
        let rows = vec![SweepRow {
            observable: "spin[0][0]".into(),
            t: 1.0,
            x_id: "a".into(),
            h: None,
            error: None,
            slope: Some(1.0),
            r2: Some(0.99),
            status: "pass".into(),
        }];
        let s = csv_string(&rows).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("observable,t,X_id,h,error,slope,r2,status"));
        assert_eq!(lines.next(), Some("spin[0][0],1.0,a,,,1.0,0.99,pass"));
    }
}
