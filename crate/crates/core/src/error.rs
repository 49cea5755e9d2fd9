use thiserror::Error;

/// Errors produced by the mapping, the eigensolver and the sweep runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter lies outside the range where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input (sizes, tables, grids, flags).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The circuit has no inter-cell coupling, so there is no spin chain to build.
    #[error("no interaction: gamma = 0 decouples the cells")]
    NoInteraction,

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NotConverged {
        iterations: usize,
        best_residual: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for validation problems, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotConverged { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
