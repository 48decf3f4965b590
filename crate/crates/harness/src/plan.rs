use crate::error::{HarnessError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spinfield::model::{polarization_project, Model, ModelConfig, PhaseVector, Polarization};
use spinfield::ode::OdeOptions;
use spinfield::oracle::{ObservableSpec, PropagationOptions};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarizationChoice {
    Plus,
    Minus,
}

impl From<PolarizationChoice> for Polarization {
    fn from(p: PolarizationChoice) -> Self {
        match p {
            PolarizationChoice::Plus => Polarization::Plus,
            PolarizationChoice::Minus => Polarization::Minus,
        }
    }
}

/// One classical point `X`: explicit coordinates, or a seeded random direction
/// scaled to `radius` (optionally projected onto one circular polarization first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XSample {
    pub id: String,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default)]
    pub polarization: Option<PolarizationChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanTolerances {
    /// Local tolerance of the classical ODE integrations.
    pub ode: f64,
    /// Local tolerance of the quantum propagator.
    pub propagation: f64,
    /// Largest admissible coherent tail / top-shell population.
    pub tail: f64,
}

impl Default for PlanTolerances {
    fn default() -> Self {
        Self {
            ode: 1e-12,
            propagation: 1e-11,
            tail: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// A convergence or photon-rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub name: Option<String>,
    /// Inline model, or a path (relative to the plan file) in `model_file`.
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub model_file: Option<PathBuf>,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    pub x: Vec<XSample>,
    pub t: Vec<f64>,
    /// Strictly decreasing, in `(0, 1]`.
    pub h: Vec<f64>,
    /// Times of the dual-path comparisons.
    #[serde(default = "default_crosscheck_t")]
    pub crosscheck_t: Vec<f64>,
    /// Expansion orders `M` to test.
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    pub n_max: usize,
    #[serde(default)]
    pub tolerances: PlanTolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_orders() -> Vec<usize> {
    vec![0, 1]
}

/// `0, 0.25, …, 2`
fn default_crosscheck_t() -> Vec<f64> {
    (0..=8).map(|k| 0.25 * k as f64).collect()
}

/// A resolved point with its id.
#[derive(Debug, Clone)]
pub struct ResolvedX {
    pub id: String,
    pub x: PhaseVector,
    pub polarization: Option<PolarizationChoice>,
}

impl ExperimentPlan {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let plan: Self = toml::from_str(s)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut plan = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        plan.base_dir = path.parent().map(Path::to_path_buf);
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Plan(m));
        if self.model.is_some() == self.model_file.is_some() {
            return bad("exactly one of `model` and `model_file` must be given".into());
        }
        if self.h.len() < 4 {
            return bad(format!("slope fits need at least 4 h values, got {}", self.h.len()));
        }
        if self.h.iter().any(|&h| !(h > 0.0 && h <= 1.0)) {
            return bad("every h must lie in (0, 1]".into());
        }
        if self.h.windows(2).any(|w| w[1] >= w[0]) {
            return bad("the h list must be strictly decreasing".into());
        }
        if self.t.is_empty() || self.t.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return bad("t samples must be finite and non-negative".into());
        }
        if self.crosscheck_t.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return bad("crosscheck_t samples must be finite and non-negative".into());
        }
        if self.x.is_empty() {
            return bad("at least one X sample is required".into());
        }
        let mut ids: Vec<&str> = self.x.iter().map(|x| x.id.as_str()).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("X sample ids must be unique".into());
        }
        for s in &self.x {
            let explicit = s.q.is_some() || s.p.is_some();
            if explicit == s.radius.is_some() {
                return bad(format!("X sample '{}' needs either q/p or radius", s.id));
            }
            if explicit && (s.q.is_none() || s.p.is_none()) {
                return bad(format!("X sample '{}' needs both q and p", s.id));
            }
        }
        if self.n_max == 0 {
            return bad("n_max must be positive".into());
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model> {
        let cfg = match (&self.model, &self.model_file) {
            (Some(c), _) => c.clone(),
            (None, Some(p)) => {
                let path = match &self.base_dir {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                ModelConfig::from_file(path)?
            }
            (None, None) => return Err(HarnessError::Plan("no model".into())),
        };
        Ok(Model::new(cfg)?)
    }

    pub fn ode_options(&self) -> OdeOptions {
        OdeOptions::with_tol(self.tolerances.ode)
    }

    pub fn propagation_options(&self) -> PropagationOptions {
        PropagationOptions {
            tail_threshold: self.tolerances.tail,
            ..PropagationOptions::default().with_tol(self.tolerances.propagation)
        }
    }

    /// Points in plan order; random ones are drawn from a stream seeded by `seed` and the sample index.
    pub fn samples(&self, model: &Model) -> Result<Vec<ResolvedX>> {
        let d = model.dim();
        self.x
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let x = if let (Some(q), Some(p)) = (&s.q, &s.p) {
                    if q.len() != d || p.len() != d {
                        return Err(HarnessError::Plan(format!("X sample '{}' must have {d} q and p entries", s.id)));
                    }
                    let x = PhaseVector::from_slices(q, p);
                    match s.polarization {
                        Some(pol) => polarization_project(&model.grid, pol.into(), &x)?,
                        None => x,
                    }
                } else {
                    let radius = s.radius.unwrap();
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
                    let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let mut x = PhaseVector::from_slices(&q, &p);
                    if let Some(pol) = s.polarization {
                        x = polarization_project(&model.grid, pol.into(), &x)?;
                    }
                    let n = x.norm();
                    if n == 0.0 {
                        return Err(HarnessError::Plan(format!("X sample '{}' degenerates to zero", s.id)));
                    }
                    x.scale(radius / n)
                };
                Ok(ResolvedX {
                    id: s.id.clone(),
                    x,
                    polarization: s.polarization,
                })
            })
            .collect()
    }

    /// Cutoff adequacy: mean photon number `m = |X|²/(2 h_min)` must satisfy `m + 3√m ≤ n_max`.
    pub fn precheck(&self, xs: &[ResolvedX]) -> Result<()> {
        let hmin = self.h.iter().cloned().fold(f64::INFINITY, f64::min);
        for s in xs {
            let mean = s.x.norm().powi(2) / (2.0 * hmin);
            let need = mean + 3.0 * mean.sqrt();
            if need > self.n_max as f64 {
                return Err(HarnessError::Plan(format!(
                    "X sample '{}' has mean photon number {mean:.3} at h = {hmin}; needs n_max ≥ {need:.1}, plan has {}",
                    s.id, self.n_max
                )));
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.dir.as_ref().map(|d| match &self.base_dir {
            Some(b) if d.is_relative() => b.join(d),
            _ => d.clone(),
        })
    }
}
