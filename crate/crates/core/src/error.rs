use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("invalid variance {0}: must be positive and above 1e-12")]
    InvalidVariance(f64),

    #[error("mode count must be at least 1")]
    NoModes,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {index} out of range for {n_modes} mode(s)")]
    ModeIndex { index: usize, n_modes: usize },

    #[error("covariance matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("covariance violates the uncertainty principle (smallest symplectic eigenvalue {0})")]
    Unphysical(f64),

    #[error("matrix is not symplectic (max deviation {0:e})")]
    NotSymplectic(f64),

    #[error("transmittance {0} outside [0, 1]")]
    Transmittance(f64),

    #[error("detector efficiency {0} outside (0, 1]")]
    Efficiency(f64),

    #[error("gate input must be a single mode, got {0} modes")]
    MultimodeInput(usize),

    #[error("sign calibration failed: {0}")]
    Calibration(String),

    #[error("unknown target function `{0}` (expected `arctan` or `sqrt1px2`)")]
    UnknownTarget(String),

    #[error("segment count must be at least 1")]
    InvalidSegments,

    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("breakpoints must be finite with strictly increasing x (violation at index {0})")]
    Breakpoints(usize),

    #[error("error grid needs at least 1000 points, got {0}")]
    GridTooCoarse(usize),

    #[error("sample period must be positive, got {0}")]
    SamplePeriod(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("need at least 2 trials per bin, got {0}")]
    InsufficientTrials(usize),

    #[error("bin grids do not match: {0}")]
    GridMismatch(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("failed to parse {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed table line {line}: {reason}")]
    Table { line: usize, reason: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True when the failure is an internal consistency check rather than bad user input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::Unphysical(_)
                | Error::NotSymplectic(_)
                | Error::NotSymmetric(_)
                | Error::Calibration(_)
        )
    }
}
