use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} must be positive")]
    NonPositive { what: &'static str },

    #[error("{what}: {divisor} does not divide {dividend}")]
    NonDivisible {
        what: &'static str,
        divisor: usize,
        dividend: usize,
    },

    #[error("{0}")]
    Domain(String),

    #[error("batch {batch} has no assigned worker")]
    UncoveredBatch { batch: usize },

    /// The exact method would be too expensive for this input; use Monte Carlo.
    #[error("{0}; use Monte Carlo simulation instead")]
    ComplexityGuard(String),

    #[error("none of the {n_samples} trials covered every batch")]
    NoCoverage { n_samples: u64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
