use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not positive definite at row {index} (pivot {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("non-positive diagonal entry {value:e} at {block} dof {index}")]
    NonPositiveDiagonal { block: &'static str, index: usize, value: f64 },
    #[error("no node is enriched; the discretization reduces to FEM")]
    NoEnrichment,
    #[error("iteration breakdown: {0}")]
    Breakdown(String),
    #[error("iteration did not converge: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;
