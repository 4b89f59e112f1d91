use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GcrError {
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),
    #[error("invalid weight at index {index}: {value}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("index out of range: {what} = {index} (limit {limit})")]
    OutOfRange { what: &'static str, index: usize, limit: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("enumeration too large: {count} items exceeds cap {cap}")]
    TooLarge { count: u128, cap: u128 },
    #[error("NaN encountered in {0}")]
    NotANumber(&'static str),
    #[error("policy hole at period {t}, info state {state}")]
    PolicyHole { t: usize, state: String },
    #[error("structural error: {0}")]
    Structure(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, GcrError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> GcrError {
    GcrError::InvalidParameter { name, reason: reason.into() }
}
