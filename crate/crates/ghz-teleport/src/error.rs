//! Error types shared across the crate.

/// Errors reported by state construction, measurement, and protocol runs.
///
/// `Config` covers caller mistakes (bad register, mismatched dimensions,
/// invalid scenario parameters). `Invariant` covers numerical facts that
/// must hold for any correctly constructed state (norms, Hermiticity,
/// trace, positivity, probability bookkeeping); an `Invariant` error means
/// either corrupted input data or a bug, and the message names the
/// violated invariant.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
