//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector must have at least one component")]
    EmptyVector,

    #[error("vector component at index {index} is not finite: {value}")]
    NonFiniteComponent { index: usize, value: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("dimension {dim} outside supported range [{min}, {max}]")]
    DimOutOfRange { dim: usize, min: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
