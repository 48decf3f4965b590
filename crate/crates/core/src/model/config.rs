use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinsConfig {
    pub count: usize,
    pub positions: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub beta: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffConfig {
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_family() -> String {
    "gaussian".into()
}

fn default_lambda() -> f64 {
    1.0
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            family: default_family(),
            lambda: default_lambda(),
        }
    }
}

/// Direction set: either a named set (`"z"`, `"octahedral"`, `"cube-corners"`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Directions {
    Named(String),
    List(Vec<[f64; 3]>),
}

impl Directions {
    pub fn resolve(&self) -> Result<Vec<[f64; 3]>> {
        match self {
            Directions::List(v) => Ok(v.clone()),
            Directions::Named(name) => match name.as_str() {
                "z" => Ok(vec![[0.0, 0.0, 1.0]]),
                "octahedral" => Ok(vec![
                    [1.0, 0.0, 0.0],
                    [-1.0, 0.0, 0.0],
                    [0.0, 1.0, 0.0],
                    [0.0, -1.0, 0.0],
                    [0.0, 0.0, 1.0],
                    [0.0, 0.0, -1.0],
                ]),
                "cube-corners" => {
                    let s = 1.0 / 3f64.sqrt();
                    let mut v = Vec::new();
                    for a in [-s, s] {
                        for b in [-s, s] {
                            for c in [-s, s] {
                                v.push([a, b, c]);
                            }
                        }
                    }
                    Ok(v)
                }
                other => Err(Error::Config(format!("unknown direction set '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub radial_nodes: usize,
    /// Upper radial limit; when absent it is chosen so the cutoff tail is below 1e-12.
    #[serde(default)]
    pub kmax: Option<f64>,
    pub directions: Directions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub spins: SpinsConfig,
    pub field: FieldConfig,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    pub grid: GridConfig,
}

impl ModelConfig {
    /// One spin at the origin, one k-point `(0, 0, 1)`, Gaussian cutoff with `Λ = 1`.
    pub fn minimal(beta: [f64; 3]) -> Self {
        Self {
            spins: SpinsConfig {
                count: 1,
                positions: vec![[0.0; 3]],
            },
            field: FieldConfig { beta },
            cutoff: CutoffConfig::default(),
            grid: GridConfig {
                radial_nodes: 1,
                kmax: Some(2.0),
                directions: Directions::Named("z".into()),
            },
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.spins.count;
        if n == 0 {
            return Err(Error::Config("spins.count must be at least 1".into()));
        }
        if self.spins.positions.len() != n {
            return Err(Error::Config(format!(
                "spins.positions has {} entries, spins.count is {n}",
                self.spins.positions.len()
            )));
        }
        for (i, a) in self.spins.positions.iter().enumerate() {
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!("spin position {i} is not finite")));
            }
            for b in &self.spins.positions[i + 1..] {
                let d2: f64 = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum();
                if d2 < 1e-24 {
                    return Err(Error::Config("spin positions must be pairwise distinct".into()));
                }
            }
        }
        if self.field.beta.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("field.beta is not finite".into()));
        }
        if !(self.cutoff.lambda > 0.0) {
            return Err(Error::Config("cutoff.lambda must be positive".into()));
        }
        if self.grid.radial_nodes == 0 {
            return Err(Error::Config("grid.radial_nodes must be at least 1".into()));
        }
        if let Some(k) = self.grid.kmax {
            if !(k > 0.0) {
                return Err(Error::Config("grid.kmax must be positive".into()));
            }
        }
        if self.grid.directions.resolve()?.is_empty() {
            return Err(Error::Config("grid.directions is empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_with_named_directions() {
        let s = r#"
            [spins]
            count = 2
            positions = [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]
            [field]
            beta = [0.0, 0.0, 1.0]
            [cutoff]
            family = "gaussian"
            lambda = 1.5
            [grid]
            radial_nodes = 2
            kmax = 3.0
            directions = "octahedral"
        "#;
        let c = ModelConfig::from_toml_str(s).unwrap();
        assert_eq!(c.spins.count, 2);
        assert_eq!(c.grid.directions.resolve().unwrap().len(), 6);
        assert_eq!(c.cutoff.lambda, 1.5);
    }

    #[test]
    fn parses_explicit_directions() {
        let s = r#"
            [spins]
            count = 1
            positions = [[0.0, 0.0, 0.0]]
            [field]
            beta = [0.0, 0.0, 0.0]
            [grid]
            radial_nodes = 1
            directions = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
        "#;
        let c = ModelConfig::from_toml_str(s).unwrap();
        assert_eq!(c.grid.directions.resolve().unwrap().len(), 2);
        assert_eq!(c.cutoff.family, "gaussian");
    }

    #[test]
    fn rejects_coincident_spins() {
        let mut c = ModelConfig::minimal([0.0; 3]);
        c.spins.count = 2;
        c.spins.positions = vec![[0.0; 3], [0.0; 3]];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_count_mismatch() {
        let mut c = ModelConfig::minimal([0.0; 3]);
        c.spins.count = 2;
        assert!(c.validate().is_err());
    }
}
