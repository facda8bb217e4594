//! Finite-truncation spectral laboratory for the 2d Pauli operator
//! `H(b, eV)` with an off-diagonal (sign-indefinite) matrix potential.
//!
//! The crate builds, at adjustable truncation, the objects that control the
//! discrete spectrum near the zero ground energy:
//!
//! * [`magnetics`] — admissible magnetic fields `b = b0 + btilde(r)`, the
//!   radial Poisson solve for the field potential, and orthonormal zero-mode /
//!   Landau bases with their `H∓` ladders;
//! * [`potential`] — scalar profiles `U(x) = U0(θ) f(r)` with power decay and
//!   the induced 2×2 off-diagonal matrix potential;
//! * [`toeplitz`] — compressions `pW(I)p`, `pW(H₊⁻¹)p`, `p U p` and the
//!   half-sandwich `w = H₊^{-1/2} U` on the truncated bases;
//! * [`pauli`] — the truncated spinor matrix of `H(b0, eV)` and its
//!   near-zero spectrum / window counts;
//! * [`birman_schwinger`] — the reduction family `I - T_V(z)`, characteristic
//!   value scans, and the contour-integral index;
//! * [`asymptotics`] — counting functions, the accumulation constant `C_m`,
//!   power-law fits and plateau detection.

pub mod asymptotics;
pub mod birman_schwinger;
pub mod error;
pub mod linalg;
pub mod magnetics;
pub mod pauli;
pub mod potential;
pub mod quad;
pub mod toeplitz;

pub use error::{Error, Result};
