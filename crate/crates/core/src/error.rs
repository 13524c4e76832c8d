use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input violated an operation's contract (e.g. non-Hermitian input to a PSD test).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("not a channel: Choi matrix has eigenvalue {eigenvalue:e}")]
    NotAChannel { eigenvalue: f64 },

    #[error("unsupported precondition: {0}")]
    UnsupportedPrecondition(String),

    /// A mathematical guarantee failed numerically. Seeing this means the
    /// tolerance is too tight for the input or the input is badly conditioned.
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("ill-conditioned spectrum: peripheral gap {gap:e} below {threshold:e}")]
    IllConditionedSpectrum { gap: f64, threshold: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}
