use thiserror::Error;

/// Errors raised by the projection-test library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Malformed tabular input. `row` is the 1-based data row (header excluded).
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    /// Every projected score in a fold is identical, so no standard error exists.
    #[error("degenerate variance in fold {fold}: {detail}")]
    DegenerateVariance { fold: usize, detail: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by the data being numerically degenerate rather
    /// than by a malformed request.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateVariance { .. } | Error::Numerical(_) | Error::NotSymmetric { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
