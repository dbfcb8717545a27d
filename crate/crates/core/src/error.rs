//! Crate-wide error type.

/// Errors produced by configuration checks, parsers, and the simulation loop.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// Invalid configuration (out-of-range parameter, inconsistent spec).
    #[error("configuration error: {0}")]
    Config(String),

    /// A vector did not match the ambient dimension it was used with.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Malformed dataset input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The iterate left the admissible region during a run.
    #[error("divergence at round {round} with step size {gamma:e}: {detail}")]
    Divergence {
        round: u64,
        gamma: f64,
        detail: String,
    },

    /// Exhaustive enumeration was requested for an outcome space that is too
    /// large to enumerate.
    #[error("outcome space has {outcomes} outcomes, above the enumeration limit of {limit}")]
    TooManyOutcomes { outcomes: u128, limit: u64 },

    /// A quantity that requires a reference solution was requested without
    /// one.
    #[error("missing reference solution: {0}; run a reference solve first")]
    MissingReference(String),

    /// A numeric result came out non-finite where the contract requires
    /// finite values.
    #[error("non-finite value in {0}")]
    NotFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
