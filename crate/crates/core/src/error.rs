use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for length {len}")]
    IndexRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("column {column} has norm {norm}, expected unit norm")]
    Normalization { column: usize, norm: f64 },

    #[error("system is inconsistent (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("enumeration of {count} supports exceeds the budget of {budget}")]
    Budget { count: u128, budget: u128 },

    #[error("no support of size at most {k_max} reproduces the data")]
    NotFound { k_max: usize },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
