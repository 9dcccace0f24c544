use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("no positive labels; average precision is undefined")]
    NoPositiveLabels,

    #[error("invalid input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
