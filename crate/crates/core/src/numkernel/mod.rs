//! Dense complex linear algebra and special functions.
//!
//! Everything here is a pure function of its inputs. Sizes in this crate stay
//! below a few hundred, so the decompositions are plain cyclic Jacobi sweeps
//! and the solver is LU with partial pivoting.
//!
//! The transform pair is unitary: both directions scale by `1/√N`.

mod bessel;
mod dft;
mod eig;
mod matrix;
mod solve;
mod svd;

use thiserror::Error;

pub use bessel::bessel_j0;
pub use dft::{dft, dft_in_place, dft_matrix};
pub use eig::{eig_hermitian, HermitianEigen};
pub use matrix::{inner, vec_norm, ComplexMatrix};
pub use solve::{hermitian_solve, hermitian_solve_many, LuFactor, CONDITION_LIMIT};
pub use svd::{svd_decompose, Svd};

pub use num_complex::Complex64;

/// Complex vector used throughout the crate.
pub type ComplexVector = Vec<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("empty input")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (defect {defect:e} relative to norm)")]
    NotHermitian { defect: f64 },
    #[error("matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("non-finite entries in input")]
    NonFinite,
    #[error("iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

pub(crate) fn check_hermitian(a: &ComplexMatrix, tol: f64) -> Result<(), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let norm = a.frobenius_norm();
    let defect = a.hermitian_defect();
    if defect > tol * norm.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NotHermitian {
            defect: if norm > 0.0 { defect / norm } else { defect },
        });
    }
    Ok(())
}
