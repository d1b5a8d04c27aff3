use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error in {what}: {details}")]
    Domain { what: &'static str, details: String },

    /// A solution or train failed structural validation.
    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    /// Derivative order outside the supported range 0..=4.
    #[error("unsupported tau derivative order {0} (supported: 0..=4)")]
    UnsupportedOrder(usize),

    /// A numerical procedure failed (step underflow, non-finite values,
    /// detected instability).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The parameter search ran out of candidates.
    #[error("synthesis search exhausted: {0}")]
    SearchExhausted(String),

    /// Scenario or solver configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(what: &'static str, details: impl Into<String>) -> Self {
        Error::Domain {
            what,
            details: details.into(),
        }
    }

    pub fn numeric(details: impl Into<String>) -> Self {
        Error::Numeric(details.into())
    }

    pub fn config(details: impl Into<String>) -> Self {
        Error::Config(details.into())
    }
}
