use thiserror::Error;

/// Errors shared across the crate.
#[derive(Error, Debug)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Not enough data to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Regression input has zero variance in the predictor.
    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    /// Point set has rank-deficient covariance (collinear or identical points).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A serialized trajectory is corrupt or not in the expected format.
    #[error("format error: {0}")]
    Format(String),

    /// A serialized trajectory has a version this build does not support.
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
