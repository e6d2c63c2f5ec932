//! Dense complex linear algebra at desk scale.
//!
//! Everything in the crate is built on [`ComplexMatrix`]: a row-major dense
//! matrix of `Complex<f64>` entries. Matrices stay small (circuit states top
//! out well below the configured tensor limit), so the solvers here favour
//! simplicity and verifiable accuracy over asymptotic speed.

mod eigen;
mod factor;
pub mod gates;
mod matrix;
pub(crate) mod random;
mod serialize;

pub use eigen::HermitianEigen;
pub use matrix::{ComplexMatrix, Subsystem};
pub use random::haar_random_unitary;

use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Largest dimension a tensor product is allowed to reach.
pub const MAX_TENSOR_DIM: usize = 4096;

/// Numerical tolerances shared by structural validators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Slack for Hermiticity, unitarity and trace checks.
    pub eps_structural: f64,
    /// Slack below zero allowed for minimum eigenvalues of psd matrices.
    pub eps_psd: f64,
}

impl Tolerance {
    pub fn new(eps_structural: f64, eps_psd: f64) -> Result<Self, LinalgError> {
        if eps_structural <= 0.0 || eps_psd <= 0.0 {
            return Err(LinalgError::InvalidValue {
                context: "tolerances must be strictly positive".into(),
            });
        }
        Ok(Self {
            eps_structural,
            eps_psd,
        })
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            eps_structural: 1e-9,
            eps_psd: 1e-8,
        }
    }
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive definite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("dimension {requested} exceeds limit {limit}")]
    DimensionLimit { requested: usize, limit: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid value: {context}")]
    InvalidValue { context: String },
}
