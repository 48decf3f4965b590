use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index out of range: {what} = {value} (allowed {lo}..={hi})")]
    Index {
        what: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },

    #[error("semiclassical parameter must be positive, got h = {0}")]
    NonPositiveH(f64),

    #[error("matrix is not symmetric (defect {0:e})")]
    NotSymmetric(f64),

    #[error("symbol degree {degree} exceeds photon cutoff {n_max}")]
    DegreeExceedsCutoff { degree: usize, n_max: usize },

    #[error("coherent-state tail mass {tail:e} exceeds threshold {threshold:e} (n_max = {n_max})")]
    Truncation {
        tail: f64,
        threshold: f64,
        n_max: usize,
    },

    #[error("step size fell below floor {floor:e} at t = {t} after {steps} steps")]
    StepFloor { floor: f64, t: f64, steps: usize },

    #[error("unsupported observable: {0}")]
    Observable(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
