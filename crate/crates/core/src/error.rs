//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter outside its admissible range (e.g. `m <= 0`, `b0 <= 0`).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input rejected before any computation (malformed profile, basis
    /// mismatch, window colliding with ladder values, ...).
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// Adaptive quadrature failed to converge below its drift tolerance;
    /// the value is unreliable at the requested truncation.
    #[error("quadrature non-convergence: {context} (drift {drift:.3e} > tol {tol:.3e})")]
    QuadratureNonConvergence {
        context: String,
        drift: f64,
        tol: f64,
    },

    /// Truncation too small for the requested accuracy (level-sum tail,
    /// basis edge effects).
    #[error("truncation warning escalated: {0}")]
    Truncation(String),

    /// Evaluation requested outside the analyticity / resolvent domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation requires a Hermitian matrix.
    #[error("non-Hermitian input: max |A - A*| = {deviation:.3e}")]
    NonHermitian { deviation: f64 },

    /// Contour index did not round cleanly to an integer.
    #[error("contour too coarse: raw index {raw} is {distance:.3e} from the nearest integer")]
    ContourTooCoarse { raw: String, distance: f64 },

    /// Contour passes too close to a characteristic value.
    #[error("contour unsafe: sigma_min {sigma:.3e} below guard {guard:.3e} at node {node}")]
    ContourUnsafe { sigma: f64, guard: f64, node: usize },

    /// Power-law fit impossible on the requested window.
    #[error("fit not possible: {0}")]
    FitNotPossible(String),

    /// Dense linear algebra failure (eigensolve residual, singular solve).
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
