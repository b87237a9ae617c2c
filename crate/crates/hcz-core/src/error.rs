use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition (dimension mismatch,
    /// out-of-range parameter, non-normalized state, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A fringe record that should carry signal has no unambiguous
    /// dominant frequency bin.
    #[error("degraded signal: {0}")]
    DegradedSignal(String),

    /// A measurement record is missing required inputs or fringe pairs.
    #[error("missing data: absent pairs {0:?}")]
    MissingData(Vec<(usize, usize)>),

    /// A quantity that must be read from near-zero matrix entries.
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    /// A numerical fit failed to converge.
    #[error("fit failure: {0}")]
    FitFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
