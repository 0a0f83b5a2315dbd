//! Small self-contained linear algebra kernels: symmetric band factorizations,
//! dense Cholesky and Householder tridiagonalization, Sturm counting.

pub mod band;
pub mod dense;
pub mod tridiag;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("LDLᵀ without pivoting hit a tiny pivot or excessive growth at row {row}")]
    PivotTrouble { row: usize },
}

pub use band::{BandCholesky, BandMatrix};
pub use dense::{DenseCholesky, DenseSym};
