use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (e.g. log of a
    /// non-positive interval, division by an interval containing zero).
    #[error("domain error: {0}")]
    Domain(String),

    /// Working precision too low to produce a meaningful certificate.
    #[error("precision error: {0}")]
    Precision(String),

    /// A lemma/proposition hypothesis does not hold for the given parameters.
    /// These are reported, never silently ignored.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Resource limits (memory budget, representable-range budget).
    #[error("limit exceeded: {0}")]
    Limit(String),

    /// Exact integer arithmetic would overflow its fixed-width budget.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Malformed configuration or search specification.
    #[error("invalid specification: {0}")]
    Spec(String),

    /// An x-subinterval straddles a case split and must be bisected further
    /// by the caller; not a user-facing failure.
    #[error("case split unresolved on subinterval: {0}")]
    Straddle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
