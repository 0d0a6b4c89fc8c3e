//! Error categories shared across the simulator.

/// Errors produced by the simulation library.
///
/// Each variant is a distinct failure category so that front ends can map
/// them to stable exit codes.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Matrix or sequence dimensions do not match an operation's contract.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Invalid or unsupported configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A numeric procedure failed (non-convergence, non-finite values).
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// The exhaustive decoder's candidate space exceeds the guard.
    #[error("candidate space too large: {0}")]
    Complexity(String),
    /// Channel estimation failed (e.g. rank-deficient pilots).
    #[error("channel estimation failed: {0}")]
    Estimation(String),
    /// Caller misuse that is not a configuration problem (e.g. empty input).
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
