use thiserror::Error;

/// Failure modes shared by every pipeline.
///
/// `Retryable` and `Exhausted` are ordinary operational outcomes of the
/// probabilistic decoders; `Anomaly` marks a violated provable
/// invariant and should be treated as a bug signal.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("inversion of zero")]
    ZeroInverse,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("retryable failure: {0}")]
    Retryable(String),
    #[error("retries exhausted: {0}")]
    Exhausted(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("assumption failed: {0}")]
    Assumption(String),
    #[error("anomaly: {0}")]
    Anomaly(String),
}

pub type Result<T> = std::result::Result<T, Error>;
