use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry at index {index} of {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("svd did not converge within {sweeps} sweeps (off-diagonal residual {residual:e})")]
    SvdNotConverged { sweeps: usize, residual: f64 },

    #[error("eigen solver did not converge within {sweeps} sweeps (off-diagonal residual {residual:e})")]
    EigenNotConverged { sweeps: usize, residual: f64 },

    #[error("fused lasso dual not converged after {iterations} iterations (projected gradient norm {residual:e})")]
    DualNotConverged { iterations: usize, residual: f64 },

    #[error("prox oracle failed: {0}")]
    Oracle(String),

    #[error("reference solve not converged after {iterations} iterations (gradient mapping norm {residual:e})")]
    ReferenceNotConverged { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("delay bound violated: update {t} used snapshot {source_index} with tau = {tau}")]
    DelayBound {
        t: usize,
        source_index: usize,
        tau: usize,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short stable tag used in machine-parsable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "non_finite",
            Error::Shape(_) => "shape",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::SvdNotConverged { .. } => "svd_not_converged",
            Error::EigenNotConverged { .. } => "eigen_not_converged",
            Error::DualNotConverged { .. } => "dual_not_converged",
            Error::Oracle(_) => "oracle",
            Error::ReferenceNotConverged { .. } => "reference_not_converged",
            Error::Config(_) => "config",
            Error::DelayBound { .. } => "delay_bound",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
