//! Truncated spinor matrix of `H(b0, eV)` on the Landau product basis and
//! its near-zero spectrum.
//!
//! The matrix has the block form `[[H-, e Ū], [e U, H+]]` with diagonal
//! ladders on the two spin components. For a radial potential the angular
//! momentum `m = j - q` is conserved, so the matrix splits into sectors of
//! at most `2Q` states; that path handles truncations far beyond what a
//! dense eigensolve could. Angular potentials fall back to the dense
//! representation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::magnetics::{build_landau_basis, MagneticField};
use crate::potential::Potential;
use crate::toeplitz;

/// Eigenvalues below this are treated as numerically zero by the
/// localization checks.
pub const LOCALIZATION_FLOOR: f64 = 1e-10;

/// Largest dense spinor dimension (`2 K Q`) the fallback path accepts.
pub const MAX_DENSE_DIM: usize = 4096;

/// Spectral window `[-r0 e², -r e²)`, `0 < r < r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub r0: f64,
    pub r: f64,
}

impl Window {
    pub fn new(r0: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) || !(r < r0) {
            return Err(Error::InvalidParameter(format!(
                "window needs 0 < r < r0, got r = {r}, r0 = {r0}"
            )));
        }
        Ok(Self { r0, r })
    }

    /// Window bounds on the energy axis for coupling `e`.
    pub fn bounds(&self, e: f64) -> (f64, f64) {
        (-self.r0 * e * e, -self.r * e * e)
    }
}

#[derive(Debug, Clone)]
struct Sector {
    /// Conserved angular momentum of the sector.
    m: i64,
    /// Landau levels present (`j = m + q` within `0..K`).
    levels: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
enum Repr {
    Sectored(Vec<Sector>),
    Dense(DMatrix<Complex64>),
}

/// Finite spinor model of `H(b0, eV)` at truncation `(K, Q)`.
#[derive(Debug, Clone)]
pub struct PauliTruncation {
    pub field: MagneticField,
    pub pot: Potential,
    pub coupling: f64,
    pub k_count: usize,
    pub q_levels: usize,
    pub zeta: f64,
    repr: Repr,
}

/// Near-zero spectral data: everything inside `(-ζ/2, ζ/2)`, the window
/// count, and any positive eigenvalues above the numerical floor (the
/// localization statement says there should be none for generic coupling).
#[derive(Debug, Clone)]
pub struct NearZeroSpectrum {
    pub eigenvalues: Vec<f64>,
    pub window_count: usize,
    pub positive: Vec<f64>,
}

pub fn build(
    field: &MagneticField,
    pot: &Potential,
    coupling: f64,
    k_count: usize,
    q_levels: usize,
) -> Result<PauliTruncation> {
    if !field.is_constant() {
        return Err(Error::RejectedInput(
            "the spinor model needs a constant field; nonconstant radial fields are exercised \
             through the operator inequalities on the zero modes"
                .into(),
        ));
    }
    if k_count < 1 || q_levels < 1 {
        return Err(Error::InvalidParameter("truncation needs K, Q >= 1".into()));
    }
    if pot.is_radial() || pot.is_zero() {
        build_sectored(field, pot, coupling, k_count, q_levels)
    } else {
        build_dense(field, pot, coupling, k_count, q_levels)
    }
}

fn sector_hamiltonian(
    b0: f64,
    coupling: f64,
    levels: &[usize],
    ublock: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let n = levels.len();
    let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for (a, &q) in levels.iter().enumerate() {
        h[(a, a)] = Complex64::new(2.0 * b0 * q as f64, 0.0);
        h[(n + a, n + a)] = Complex64::new(2.0 * b0 * (q + 1) as f64, 0.0);
    }
    for a in 0..n {
        for b in 0..n {
            let u = ublock[(a, b)] * Complex64::new(coupling, 0.0);
            h[(n + a, b)] = u; // e U : up -> down
            h[(a, n + b)] = ublock[(b, a)].conj() * Complex64::new(coupling, 0.0);
        }
    }
    h
}

fn build_sectored(
    field: &MagneticField,
    pot: &Potential,
    coupling: f64,
    k_count: usize,
    q_levels: usize,
) -> Result<PauliTruncation> {
    let b0 = field.b0;
    let m_lo = -(q_levels as i64 - 1);
    let m_hi = k_count as i64 - 1;
    let mut sectors = Vec::with_capacity((m_hi - m_lo + 1) as usize);
    for m in m_lo..=m_hi {
        let (levels, ublock) = if pot.is_zero() {
            let levels: Vec<usize> = (0..q_levels)
                .filter(|&q| {
                    let j = m + q as i64;
                    j >= 0 && j < k_count as i64
                })
                .collect();
            let n = levels.len();
            (levels, DMatrix::<Complex64>::zeros(n, n))
        } else {
            toeplitz::landau_sector_u_block(pot, b0, m, k_count, q_levels)?
        };
        if levels.is_empty() {
            continue;
        }
        let matrix = sector_hamiltonian(b0, coupling, &levels, &ublock);
        sectors.push(Sector { m, levels, matrix });
    }
    Ok(PauliTruncation {
        field: field.clone(),
        pot: pot.clone(),
        coupling,
        k_count,
        q_levels,
        zeta: field.zeta,
        repr: Repr::Sectored(sectors),
    })
}

/// Dense-path constructor, also used to cross-check the sector split.
pub fn build_dense(
    field: &MagneticField,
    pot: &Potential,
    coupling: f64,
    k_count: usize,
    q_levels: usize,
) -> Result<PauliTruncation> {
    let n = k_count * q_levels;
    if 2 * n > MAX_DENSE_DIM {
        return Err(Error::Truncation(format!(
            "dense spinor dimension {} exceeds {MAX_DENSE_DIM}; use a radial potential (sector \
             path) or reduce K·Q",
            2 * n
        )));
    }
    let basis = build_landau_basis(field.b0, k_count, q_levels)?;
    let u = toeplitz::assemble_landau_u_matrix(pot, &basis)?;
    let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for (idx, s) in basis.states.iter().enumerate() {
        h[(idx, idx)] = Complex64::new(s.h_minus, 0.0);
        h[(n + idx, n + idx)] = Complex64::new(s.h_plus.unwrap(), 0.0);
    }
    let e = Complex64::new(coupling, 0.0);
    for i in 0..n {
        for j in 0..n {
            h[(n + i, j)] = e * u.entries[(i, j)];
            h[(i, n + j)] = e * u.entries[(j, i)].conj();
        }
    }
    Ok(PauliTruncation {
        field: field.clone(),
        pot: pot.clone(),
        coupling,
        k_count,
        q_levels,
        zeta: field.zeta,
        repr: Repr::Dense(h),
    })
}

impl PauliTruncation {
    pub fn dim(&self) -> usize {
        2 * self.k_count * self.q_levels
    }

    /// Materializes the full `2KQ × 2KQ` Hermitian matrix in level-major
    /// Landau ordering (spin-up block first).
    pub fn matrix(&self) -> DMatrix<Complex64> {
        match &self.repr {
            Repr::Dense(h) => h.clone(),
            Repr::Sectored(sectors) => {
                let n = self.k_count * self.q_levels;
                let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
                for sector in sectors {
                    let ns = sector.levels.len();
                    let global: Vec<usize> = sector
                        .levels
                        .iter()
                        .map(|&q| q * self.k_count + (sector.m + q as i64) as usize)
                        .collect();
                    for a in 0..ns {
                        for b in 0..ns {
                            h[(global[a], global[b])] = sector.matrix[(a, b)];
                            h[(n + global[a], n + global[b])] =
                                sector.matrix[(ns + a, ns + b)];
                            h[(n + global[a], global[b])] = sector.matrix[(ns + a, b)];
                            h[(global[a], n + global[b])] = sector.matrix[(a, ns + b)];
                        }
                    }
                }
                h
            }
        }
    }

    /// All eigenvalues, ascending, residual-verified.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut vals = match &self.repr {
            Repr::Dense(h) => linalg::hermitian_eigenvalues(h)?,
            Repr::Sectored(sectors) => {
                let mut vals = Vec::with_capacity(self.dim());
                for sector in sectors {
                    vals.extend(linalg::hermitian_eigenvalues(&sector.matrix)?);
                }
                vals
            }
        };
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(vals)
    }

    /// Spectrum inside `(-ζ/2, ζ/2)` plus the count in the window
    /// `[-r0 e², -r e²)`. Eigenvalues closer than `e·sup|U|/2` to a nonzero
    /// ladder value are discretization artifacts of the essential spectrum
    /// and are excluded.
    pub fn near_zero_spectrum(&self, window: Window) -> Result<NearZeroSpectrum> {
        let e = self.coupling;
        let half_zeta = self.zeta / 2.0;
        if window.r0 * e * e >= half_zeta {
            return Err(Error::RejectedInput(format!(
                "window floor r0 e² = {:.3e} reaches ζ/2 = {half_zeta:.3e}; the window must \
                 stay spectrally isolated",
                window.r0 * e * e
            )));
        }
        let (lo, hi) = window.bounds(e);
        let guard = e * self.pot.sup_norm() / 2.0;
        let ladder_near = |v: f64| -> bool {
            // nonzero unperturbed ladder values within reach
            let mut q = 1;
            loop {
                let level = 2.0 * self.field.b0 * q as f64;
                if level - guard > half_zeta.max(v.abs()) + guard {
                    return false;
                }
                if (v - level).abs() <= guard {
                    return true;
                }
                q += 1;
            }
        };
        if [lo, hi].iter().any(|&bound| ladder_near(bound)) {
            return Err(Error::RejectedInput(
                "window collides with ladder eigenvalues".into(),
            ));
        }
        let all = self.eigenvalues()?;
        let near: Vec<f64> = all
            .iter()
            .copied()
            .filter(|&v| v > -half_zeta && v < half_zeta && !ladder_near(v))
            .collect();
        let window_count = near.iter().filter(|&&v| v >= lo && v < hi).count();
        let positive: Vec<f64> = near
            .iter()
            .copied()
            .filter(|&v| v > LOCALIZATION_FLOOR)
            .collect();
        Ok(NearZeroSpectrum {
            eigenvalues: near,
            window_count,
            positive,
        })
    }
}
