//! Error types used throughout the crate.

use thiserror::Error;

/// Crate-wide `Result` alias.
pub type Result<T> = core::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// A probability vector or matrix failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    /// Channel matrix failed validation (row sums, negative or NaN entries).
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    /// Metric specification failed validation.
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    /// Two objects that must share an alphabet do not.
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    /// Paired symbol sequences of different length.
    #[error("sequence lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    /// `denominator * composition` is not an integer vector.
    #[error("composition is not a type with denominator {denominator}{}", match nearest {
        Some(n) => format!(" (nearest valid denominator: {n})"),
        None => String::new(),
    })]
    NonIntegralComposition {
        denominator: usize,
        nearest: Option<usize>,
    },
    /// The grid at the requested resolution has no point satisfying the constraints.
    #[error("no feasible grid point at resolution {resolution}: resolution too coarse")]
    EmptyFeasibleGrid { resolution: usize },
    /// Exhaustive output enumeration would exceed the configured budget.
    #[error("exhaustive enumeration needs {required} outputs, budget is {budget}; use Monte Carlo")]
    BudgetExceeded { required: u128, budget: u128 },
    /// Any other out-of-range argument.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
