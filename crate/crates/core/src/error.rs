use thiserror::Error;

/// Errors produced anywhere in the simulation, estimation and reporting chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock dimension must be at least 2 (got {0})")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Fock index {n} out of range for dimension {dim}")]
    FockIndexOutOfRange { n: usize, dim: usize },

    #[error("truncation inadequate for {what}: {detail}")]
    Truncation { what: &'static str, detail: String },

    #[error("state vector has zero norm")]
    ZeroVector,

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("detector outcome {outcome} is not available: {reason}")]
    InvalidOutcome { outcome: String, reason: String },

    #[error("herald probability vanishes ({0:e})")]
    VanishingHerald(f64),

    #[error("phase-space point ({q}, {p}) lies outside the truncation validity radius {radius}")]
    OutsideTruncation { q: f64, p: f64, radius: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage} stage failed")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// Wraps this error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
