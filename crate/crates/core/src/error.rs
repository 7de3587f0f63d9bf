use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative entry {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, more than 1e-9 away from 1")]
    RowSumOutOfTolerance { row: usize, sum: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("enumeration needs {needed} terms but the cap is {cap}")]
    CapExceeded { needed: u64, cap: u64 },

    #[error("rho must be nonnegative, got {0}")]
    NegativeRho(f64),

    #[error("rho {0} outside the admissible range")]
    RhoOutOfRange(f64),

    #[error("argument out of range: {0}")]
    RangeViolation(String),

    #[error("no convergence after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error("bad spec key `{key}`: {reason}")]
    Spec { key: String, reason: String },
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn spec(key: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        Error::Spec {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}
