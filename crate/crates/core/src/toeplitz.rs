//! Sandwiched operators on the truncated bases: the element matrices of
//! `U`, the Toeplitz compressions `pW(I)p` and `pW(H₊⁻¹)p`, the
//! half-sandwich `w = H₊^{-1/2} U`, and their spectra.
//!
//! Matrix elements factor into an angular coefficient (selection rule) and
//! a radial product handled by the basis quadrature machinery; only entries
//! whose harmonic actually occurs in `U0` are computed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::magnetics::{self, Basis, BasisKind};
use crate::potential::Potential;

/// Relative convergence target for each matrix-element quadrature.
pub const ELEMENT_TOL: f64 = 1e-11;
/// Drift above this is reported as a truncation-error signal.
pub const DRIFT_WARN: f64 = 1e-8;
/// Level-sum tail threshold: the last level's trace increment must stay
/// below this fraction of the total.
pub const TAIL_WARN: f64 = 1e-8;

/// Finite matrix standing for a truncated operator, tagged with its basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: DMatrix<Complex64>,
    pub basis_tag: String,
    pub hermitian: bool,
    /// Truncation parameters (K, Q) the matrix was built at.
    pub truncation: (usize, usize),
    /// Largest quadrature drift over all assembled entries.
    pub max_drift: f64,
    /// Truncation-error signals collected during assembly.
    pub warnings: Vec<String>,
}

impl OperatorMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    /// Measures Hermiticity and sets the flag accordingly.
    pub fn tag_hermitian(mut self) -> Self {
        self.hermitian = self.entries.is_square()
            && linalg::hermiticity_deviation(&self.entries) < 1e-12;
        self
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix {
            entries: self.entries.adjoint(),
            basis_tag: format!("adjoint({})", self.basis_tag),
            hermitian: self.hermitian,
            truncation: self.truncation,
            max_drift: self.max_drift,
            warnings: self.warnings.clone(),
        }
    }

    /// Smallest eigenvalue relative to the largest magnitude one; the
    /// positivity checks assert this stays above `-1e-10`.
    pub fn relative_min_eigenvalue(&self) -> Result<f64> {
        let vals = linalg::hermitian_eigenvalues(&self.entries)?;
        let max = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if max == 0.0 {
            return Ok(0.0);
        }
        Ok(vals[0] / max)
    }
}

/// Sorted eigenvalue list of a Hermitian operator matrix, descending, with
/// per-pair residuals verified against `1e-9 ‖A‖`.
pub fn spectrum(mat: &OperatorMatrix) -> Result<Vec<f64>> {
    let dev = linalg::hermiticity_deviation(&mat.entries);
    if !mat.hermitian || dev > 1e-12 * linalg::max_abs_entry(&mat.entries).max(1.0) {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let mut vals = linalg::hermitian_eigenvalues(&mat.entries)?;
    vals.reverse();
    Ok(vals)
}

/// Which bounded operator `B` is sandwiched in `W(B) = conj(U) B (U ·)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SandwichOperator {
    Identity,
    HplusInverse,
}

/// Angular coefficient table with optional conjugation (for `conj(U)` use
/// `c'_ν = conj(c_{-ν})`).
struct AngularTable {
    coeffs: Vec<(i64, Complex64)>,
    conjugated: bool,
}

impl AngularTable {
    fn plain(pot: &Potential) -> Self {
        Self {
            coeffs: pot.angular_coeffs(),
            conjugated: false,
        }
    }

    fn conjugated(pot: &Potential) -> Self {
        Self {
            coeffs: pot.angular_coeffs(),
            conjugated: true,
        }
    }

    fn squared(pot: &Potential) -> Self {
        Self {
            coeffs: pot.modulus_squared().0.exp_coeffs(),
            conjugated: false,
        }
    }

    fn coeff(&self, nu: i64) -> Complex64 {
        let lookup = if self.conjugated { -nu } else { nu };
        let c = self
            .coeffs
            .iter()
            .find(|&&(k, _)| k == lookup)
            .map(|&(_, c)| c)
            .unwrap_or(Complex64::ZERO);
        if self.conjugated {
            c.conj()
        } else {
            c
        }
    }

    fn harmonics(&self) -> Vec<i64> {
        self.coeffs
            .iter()
            .filter(|&&(_, c)| c != Complex64::ZERO)
            .map(|&(nu, _)| nu)
            .collect()
    }
}

/// Radial part of one Landau-type element between states `(q, j)` and
/// `(q', j')` of a constant field; indices may range outside any stored
/// basis. The caller multiplies in the angular coefficient.
fn landau_element(
    b0: f64,
    row: (usize, usize),
    col: (usize, usize),
    radial: &(impl Fn(f64) -> f64 + Sync),
    breaks_t: &[f64],
) -> Result<(f64, f64)> {
    let (q, j) = row;
    let (qp, jp) = col;
    let m = j as i64 - q as i64;
    let mp = jp as i64 - qp as i64;
    let (n, mu) = (q.min(j), m.unsigned_abs() as f64);
    let (np, mup) = (qp.min(jp), mp.unsigned_abs() as f64);
    let g = |t: f64| radial((2.0 * t / b0).sqrt());
    let est = if breaks_t.is_empty() {
        magnetics::landau_radial_product(n, mu, np, mup, ELEMENT_TOL, g)?
    } else {
        let alpha = 0.5 * (mu + mup);
        let ln_pref = crate::quad::ln_gamma(alpha + 1.0)
            + 0.5 * (crate::quad::ln_gamma(n as f64 + 1.0) + crate::quad::ln_gamma(np as f64 + 1.0))
            - 0.5
                * (crate::quad::ln_gamma(n as f64 + mu + 1.0)
                    + crate::quad::ln_gamma(np as f64 + mup + 1.0));
        let pref = ln_pref.exp();
        let mut est = crate::quad::gamma_expectation_with_breaks_scaled(
            alpha,
            breaks_t,
            ELEMENT_TOL,
            pref.recip(),
            |t| crate::quad::laguerre(n, mu, t) * crate::quad::laguerre(np, mup, t) * g(t),
        )?;
        est.value *= pref;
        est.drift *= pref.abs();
        est
    };
    Ok((est.value, est.drift))
}

/// Matrix of multiplication by `U` between two bases (rows ⟨bra|, columns
/// |ket⟩): `M[(i, j)] = ⟨row_i, U col_j⟩`.
pub fn assemble_u_elements(pot: &Potential, rows: &Basis, cols: &Basis) -> Result<OperatorMatrix> {
    assemble_elements(pot, rows, cols, AngularTable::plain(pot), |r| pot.radial(r))
}

/// Same, for multiplication by `conj(U)`.
pub fn assemble_ubar_elements(
    pot: &Potential,
    rows: &Basis,
    cols: &Basis,
) -> Result<OperatorMatrix> {
    assemble_elements(pot, rows, cols, AngularTable::conjugated(pot), |r| pot.radial(r))
}

fn check_compatible(rows: &Basis, cols: &Basis) -> Result<()> {
    if rows.b0 != cols.b0 {
        return Err(Error::RejectedInput(format!(
            "bases disagree on b0: {} vs {}",
            rows.b0, cols.b0
        )));
    }
    let row_const = rows.field.is_constant();
    let col_const = cols.field.is_constant();
    if rows.kind != cols.kind || !row_const || !col_const {
        // Mixed kinds and nonconstant fields are only meaningful when both
        // sides share the same field; zero modes of a constant field are
        // the level-0 Landau states, so mixed (ZeroMode, Landau) pairs are
        // allowed there.
        if rows.kind == BasisKind::ZeroMode
            && cols.kind == BasisKind::ZeroMode
            && rows.field.btilde == cols.field.btilde
        {
            return Ok(());
        }
        if row_const && col_const {
            return Ok(());
        }
        return Err(Error::RejectedInput(
            "bases must share the magnetic field and gauge".into(),
        ));
    }
    Ok(())
}

fn assemble_elements(
    pot: &Potential,
    rows: &Basis,
    cols: &Basis,
    table: AngularTable,
    radial: impl Fn(f64) -> f64 + Sync,
) -> Result<OperatorMatrix> {
    check_compatible(rows, cols)?;
    let b0 = rows.b0;
    let mut breaks_t = pot.radial_breaks_t(b0);
    breaks_t.extend(rows.weight_breaks());
    let zero_mode_pair =
        rows.kind == BasisKind::ZeroMode && cols.kind == BasisKind::ZeroMode;
    let nr = rows.len();
    let nc = cols.len();
    let results: Vec<Result<(Vec<Complex64>, f64, Vec<String>)>> = (0..nr)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![Complex64::ZERO; nc];
            let mut drift = 0.0f64;
            let mut warnings = Vec::new();
            for j in 0..nc {
                let m = rows.states[i].angular;
                let mp = cols.states[j].angular;
                let c = table.coeff(m - mp);
                if c == Complex64::ZERO {
                    continue;
                }
                let (value, d) = if zero_mode_pair && !rows.field.is_constant() {
                    // Weighted monomial route carrying e^{-2 phitilde}.
                    zero_mode_element(rows, cols, i, j, &breaks_t, &radial)?
                } else {
                    landau_element(
                        b0,
                        (rows.states[i].level, state_j_index(rows, i)),
                        (cols.states[j].level, state_j_index(cols, j)),
                        &radial,
                        &breaks_t,
                    )?
                };
                row[j] = c * value;
                drift = drift.max(d);
                if d > DRIFT_WARN {
                    warnings.push(format!(
                        "entry ({i},{j}): quadrature drift {d:.3e} above {DRIFT_WARN:.1e}"
                    ));
                }
            }
            Ok((row, drift, warnings))
        })
        .collect();
    let mut entries = DMatrix::<Complex64>::zeros(nr, nc);
    let mut max_drift = 0.0f64;
    let mut warnings = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        let (row, drift, mut warns) = res?;
        for (j, v) in row.into_iter().enumerate() {
            entries[(i, j)] = v;
        }
        max_drift = max_drift.max(drift);
        warnings.append(&mut warns);
    }
    Ok(OperatorMatrix {
        entries,
        basis_tag: format!(
            "rows: {:?}(K={}), cols: {:?}(K={}), b0={}",
            rows.kind, rows.count_angular, cols.kind, cols.count_angular, b0
        ),
        hermitian: false,
        truncation: (rows.count_angular.max(cols.count_angular), rows.count_levels.max(cols.count_levels)),
        max_drift,
        warnings,
    }
    .tag_hermitian())
}

/// `j`-index of a state within its level row (`j = m + level`).
fn state_j_index(basis: &Basis, idx: usize) -> usize {
    let s = basis.states[idx];
    (s.angular + s.level as i64) as usize
}

/// Radial part of a zero-mode element between possibly different zero-mode
/// bases sharing a field.
fn zero_mode_element(
    rows: &Basis,
    cols: &Basis,
    i: usize,
    j: usize,
    breaks_t: &[f64],
    radial: &(impl Fn(f64) -> f64 + Sync),
) -> Result<(f64, f64)> {
    let b0 = rows.b0;
    let ki = rows.states[i].angular as f64;
    let kj = cols.states[j].angular as f64;
    let s = 0.5 * (ki + kj);
    let ln_pref = crate::quad::ln_gamma(s + 1.0)
        - 0.5 * crate::quad::ln_gamma(ki + 1.0)
        - 0.5 * crate::quad::ln_gamma(kj + 1.0)
        - 0.5 * (rows.norm_expectations[i] * cols.norm_expectations[j]).ln();
    let pref = ln_pref.exp();
    let phi = &rows.field.phitilde;
    let mut est = crate::quad::gamma_expectation_with_breaks_scaled(
        s,
        breaks_t,
        ELEMENT_TOL,
        pref.recip(),
        |t| {
            let r = (2.0 * t / b0).sqrt();
            radial(r) * (-2.0 * phi.eval(r)).exp()
        },
    )?;
    est.value *= pref;
    est.drift *= pref.abs();
    Ok((est.value, est.drift))
}

/// Builds the Toeplitz compression `pW(B)p` on a zero-mode basis.
///
/// * `B = I`: entries `⟨ψ_j, |U|² ψ_k⟩`, valid for any radial field.
/// * `B = H₊^{-1}`: constant field only; the resolvent is expanded over the
///   Landau ladder, `Σ_{q<Q} (2 b0 (q+1))^{-1} A_q A_q†` with
///   `A_q[j, l] = ⟨ψ_j, conj(U) φ_{q,l}⟩`, intermediate states truncated at
///   `l < K` consistently with the spinor model.
pub fn build_toeplitz(
    pot: &Potential,
    basis: &Basis,
    b: SandwichOperator,
    q_levels: usize,
) -> Result<OperatorMatrix> {
    if basis.kind != BasisKind::ZeroMode {
        return Err(Error::RejectedInput(
            "Toeplitz compressions act on the zero-mode basis".into(),
        ));
    }
    match b {
        SandwichOperator::Identity => {
            let (_, rad_sq) = pot.modulus_squared();
            let table = AngularTable::squared(pot);
            let mut out = assemble_elements(pot, basis, basis, table, rad_sq)?;
            out.basis_tag = format!("pW(I)p, {}", out.basis_tag);
            Ok(out)
        }
        SandwichOperator::HplusInverse => {
            if !basis.field.is_constant() {
                return Err(Error::RejectedInput(
                    "pW(H+^-1)p needs a constant field (Landau ladder resolvent)".into(),
                ));
            }
            if q_levels < 1 {
                return Err(Error::InvalidParameter("level count Q must be >= 1".into()));
            }
            let k = basis.count_angular;
            let b0 = basis.b0;
            let table = AngularTable::conjugated(pot);
            let harmonics = table.harmonics();
            let breaks_t = pot.radial_breaks_t(b0);
            let radial = |r: f64| pot.radial(r);
            let mut total = DMatrix::<Complex64>::zeros(k, k);
            let mut max_drift = 0.0f64;
            let mut warnings = Vec::new();
            let mut increments = Vec::with_capacity(q_levels);
            for q in 0..q_levels {
                // A_q[j, l] = ⟨ψ_j, conj(U) φ_{q,l}⟩, nonzero only for
                // l = j + q - ν with ν a harmonic of conj(U).
                let rows_result: Vec<Result<(Vec<Complex64>, f64)>> = (0..k)
                    .into_par_iter()
                    .map(|j| {
                        let mut row = vec![Complex64::ZERO; k];
                        let mut drift = 0.0f64;
                        for &nu in &harmonics {
                            // conj(U) carries e^{-iνθ}; selection m = m' - ν
                            let l = j as i64 + q as i64 + nu;
                            if l < 0 || l >= k as i64 {
                                continue;
                            }
                            let l = l as usize;
                            let c = table.coeff(j as i64 - (l as i64 - q as i64));
                            if c == Complex64::ZERO {
                                continue;
                            }
                            let (v, d) = landau_element(b0, (0, j), (q, l), &radial, &breaks_t)?;
                            row[l] = c * v;
                            drift = drift.max(d);
                        }
                        Ok((row, drift))
                    })
                    .collect();
                let mut a_q = DMatrix::<Complex64>::zeros(k, k);
                for (j, res) in rows_result.into_iter().enumerate() {
                    let (row, d) = res?;
                    for (l, v) in row.into_iter().enumerate() {
                        a_q[(j, l)] = v;
                    }
                    max_drift = max_drift.max(d);
                    if d > DRIFT_WARN {
                        warnings.push(format!(
                            "level {q} row {j}: quadrature drift {d:.3e}"
                        ));
                    }
                }
                let weight = 1.0 / (2.0 * b0 * (q + 1) as f64);
                let term = &a_q * a_q.adjoint() * Complex64::new(weight, 0.0);
                increments.push(term.diagonal().iter().map(|c| c.re).sum::<f64>());
                total += term;
            }
            let trace: f64 = increments.iter().sum();
            if let Some(&last) = increments.last() {
                if trace > 0.0 && last > TAIL_WARN * trace {
                    warnings.push(format!(
                        "level-sum tail: last increment {last:.3e} exceeds {TAIL_WARN:.1e} of trace {trace:.3e}; increase Q"
                    ));
                }
            }
            Ok(OperatorMatrix {
                entries: total,
                basis_tag: format!("pW(H+^-1)p, zero modes K={k}, b0={b0}, Q={q_levels}"),
                hermitian: false,
                truncation: (k, q_levels),
                max_drift,
                warnings,
            }
            .tag_hermitian())
        }
    }
}

/// Per-level trace increments of the `H₊^{-1}` level sum; used by the
/// monotonicity and tail-decay checks.
pub fn hplus_level_trace_increments(
    pot: &Potential,
    basis: &Basis,
    q_levels: usize,
) -> Result<Vec<f64>> {
    let mut increments = Vec::with_capacity(q_levels);
    let mut prev = 0.0;
    for q in 1..=q_levels {
        let m = build_toeplitz(pot, basis, SandwichOperator::HplusInverse, q)?;
        let trace: f64 = m.entries.diagonal().iter().map(|c| c.re).sum();
        increments.push(trace - prev);
        prev = trace;
    }
    Ok(increments)
}

/// The half-sandwich `w = H₊^{-1/2} U` mapping zero-mode coefficients into
/// Landau coefficients: a `(K·Q) × K` matrix with
/// `w[(q,l), k] = (2 b0 (q+1))^{-1/2} ⟨φ_{q,l}, U ψ_k⟩`.
pub fn build_w(pot: &Potential, basis: &Basis, q_levels: usize) -> Result<OperatorMatrix> {
    if basis.kind != BasisKind::ZeroMode || !basis.field.is_constant() {
        return Err(Error::RejectedInput(
            "w = H+^{-1/2} U needs a constant field and a zero-mode basis".into(),
        ));
    }
    let k = basis.count_angular;
    let b0 = basis.b0;
    let table = AngularTable::plain(pot);
    let breaks_t = pot.radial_breaks_t(b0);
    let radial = |r: f64| pot.radial(r);
    let mut entries = DMatrix::<Complex64>::zeros(k * q_levels, k);
    let mut max_drift = 0.0f64;
    let mut warnings = Vec::new();
    let results: Vec<Result<(usize, Vec<Complex64>, f64)>> = (0..k * q_levels)
        .into_par_iter()
        .map(|row_idx| {
            let q = row_idx / k;
            let l = row_idx % k;
            let m = l as i64 - q as i64;
            let mut row = vec![Complex64::ZERO; k];
            let mut drift = 0.0f64;
            let scale = (2.0 * b0 * (q + 1) as f64).sqrt().recip();
            for kk in 0..k {
                let c = table.coeff(m - kk as i64);
                if c == Complex64::ZERO {
                    continue;
                }
                let (v, d) = landau_element(b0, (q, l), (0, kk), &radial, &breaks_t)?;
                row[kk] = c * Complex64::new(v * scale, 0.0);
                drift = drift.max(d);
            }
            Ok((row_idx, row, drift))
        })
        .collect();
    for res in results {
        let (row_idx, row, d) = res?;
        for (kk, v) in row.into_iter().enumerate() {
            entries[(row_idx, kk)] = v;
        }
        max_drift = max_drift.max(d);
        if d > DRIFT_WARN {
            warnings.push(format!("w row {row_idx}: quadrature drift {d:.3e}"));
        }
    }
    Ok(OperatorMatrix {
        entries,
        basis_tag: format!("w = H+^(-1/2) U, K={k}, Q={q_levels}, b0={b0}"),
        hermitian: false,
        truncation: (k, q_levels),
        max_drift,
        warnings,
    })
}

/// Dense `N×N` matrix of `U` on the Landau basis with `N = K·Q`, states
/// ordered level-major (`index = q·K + j`). Shared by the spinor model and
/// the reduction family.
pub fn assemble_landau_u_matrix(pot: &Potential, basis: &Basis) -> Result<OperatorMatrix> {
    if basis.kind != BasisKind::Landau {
        return Err(Error::RejectedInput("expected a Landau basis".into()));
    }
    assemble_u_elements(pot, basis, basis)
}

/// For a radial potential the `U` matrix is block-diagonal over angular
/// momentum: returns the level indices participating in sector `m` and the
/// corresponding block `⟨(q, m+q)| U |(q', m+q')⟩`.
pub fn landau_sector_u_block(
    pot: &Potential,
    b0: f64,
    m: i64,
    k_count: usize,
    q_levels: usize,
) -> Result<(Vec<usize>, DMatrix<Complex64>)> {
    if !pot.is_radial() {
        return Err(Error::RejectedInput(
            "sector decomposition requires a radial potential".into(),
        ));
    }
    let levels: Vec<usize> = (0..q_levels)
        .filter(|&q| {
            let j = m + q as i64;
            j >= 0 && j < k_count as i64
        })
        .collect();
    let amp = AngularTable::plain(pot).coeff(0);
    let breaks_t = pot.radial_breaks_t(b0);
    let radial = |r: f64| pot.radial(r);
    let n = levels.len();
    let mut block = DMatrix::<Complex64>::zeros(n, n);
    for (a, &q) in levels.iter().enumerate() {
        for (bb, &qp) in levels.iter().enumerate() {
            let j = (m + q as i64) as usize;
            let jp = (m + qp as i64) as usize;
            let (v, _) = landau_element(b0, (q, j), (qp, jp), &radial, &breaks_t)?;
            block[(a, bb)] = amp * v;
        }
    }
    Ok((levels, block))
}

/// Diagonal of `p U p` on a zero-mode basis for a radial potential (the
/// angular selection rule makes the compression diagonal); avoids
/// materializing a matrix at large `K`.
pub fn radial_toeplitz_diagonal(pot: &Potential, basis: &Basis) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if basis.kind != BasisKind::ZeroMode {
        return Err(Error::RejectedInput("expected a zero-mode basis".into()));
    }
    if !pot.is_radial() {
        return Err(Error::RejectedInput("expected a radial potential".into()));
    }
    let amp = pot.u0.eval(0.0);
    let mut breaks_t = pot.radial_breaks_t(basis.b0);
    breaks_t.extend(basis.weight_breaks());
    let b0 = basis.b0;
    (0..basis.len())
        .into_par_iter()
        .map(|k| {
            let est = basis.radial_product(k, k, ELEMENT_TOL, &breaks_t, |t| {
                pot.radial((2.0 * t / b0).sqrt())
            })?;
            Ok(amp * est.value)
        })
        .collect()
}

/// Variational (Galerkin) lower surrogate for `pW(H₊^{-1})p` on the span of
/// the states `U ψ_k`, valid for any radial field: the factorization
/// `H₊ = a a†` turns each diagonal entry into
/// `⟨|U|²⟩_k² / ⟨|a†(U ψ_k)|²⟩_k`. It underestimates the true compression,
/// so the bound `pW(H₊^{-1})p ≤ ζ^{-1} pW(I)p` can be exercised on fields
/// with no explicit Landau ladder.
pub fn galerkin_hplus_toeplitz(pot: &Potential, basis: &Basis) -> Result<OperatorMatrix> {
    if basis.kind != BasisKind::ZeroMode {
        return Err(Error::RejectedInput("expected a zero-mode basis".into()));
    }
    if !pot.is_radial() {
        return Err(Error::RejectedInput(
            "the Galerkin surrogate is implemented for radial potentials".into(),
        ));
    }
    let b0 = basis.b0;
    let field = basis.field.clone();
    let u0_amp = pot.u0.eval(0.0);
    let f_mod = move |r: f64| u0_amp * pot.radial(r);
    let f_mod_prime = move |r: f64| u0_amp * pot.radial_derivative(r);
    let phi_prime = {
        let field = field.clone();
        move |r: f64| 0.5 * b0 * r + field.phitilde.derivative(r)
    };
    let weight = {
        let field = field.clone();
        move |r: f64| {
            if field.is_constant() {
                1.0
            } else {
                (-2.0 * field.phitilde.eval(r)).exp()
            }
        }
    };
    let mut breaks_t = pot.radial_breaks_t(b0);
    breaks_t.extend(basis.weight_breaks());
    let k = basis.count_angular;
    let mut entries = DMatrix::<Complex64>::zeros(k, k);
    let mut max_drift = 0.0f64;
    // Expectation against the state-k density with an analytic shift:
    // ⟨h / r^{2δ}⟩_k = (b0/2)^δ Γ(k+1-δ)/Γ(k+1) E_{k-δ}[h w] / E_k[w].
    // The squared bracket splits into even-in-r pieces: `base = r·β` with
    // β smooth in t, so the cross term needs no shift and the 1/r² term
    // shifts by a full integer; raw 1/t or 1/√t factors would defeat the
    // fixed-α rules.
    let mut shifted = |kk: usize, delta: f64, h: &dyn Fn(f64) -> f64| -> Result<f64> {
        let kf = kk as f64;
        let pref = (b0 / 2.0).powf(delta)
            * (crate::quad::ln_gamma(kf + 1.0 - delta) - crate::quad::ln_gamma(kf + 1.0)).exp();
        let est = crate::quad::gamma_expectation_with_breaks_scaled(
            kf - delta,
            &breaks_t,
            ELEMENT_TOL,
            pref.recip(),
            |t| {
                let r = (2.0 * t / b0).sqrt();
                h(r) * weight(r)
            },
        )?;
        max_drift = max_drift.max(est.drift);
        Ok(pref * est.value / basis.norm_expectations[kk])
    };
    for kk in 0..k {
        let kf = kk as f64;
        let base = |r: f64| f_mod_prime(r) - 2.0 * phi_prime(r) * f_mod(r);
        let numerator = shifted(kk, 0.0, &|r| f_mod(r) * f_mod(r))?;
        let mut denominator = shifted(kk, 0.0, &|r| base(r) * base(r))?;
        if kk > 0 {
            denominator += 4.0 * kf * shifted(kk, 0.0, &|r| f_mod(r) * base(r) / r)?;
            denominator += 4.0 * kf * kf * shifted(kk, 1.0, &|r| f_mod(r) * f_mod(r))?;
        }
        if denominator > 0.0 {
            entries[(kk, kk)] = Complex64::new(numerator * numerator / denominator, 0.0);
        }
    }
    Ok(OperatorMatrix {
        entries,
        basis_tag: format!("Galerkin pW(H+^-1)p surrogate, K={k}, b0={b0}"),
        hermitian: true,
        truncation: (k, 1),
        max_drift,
        warnings: vec![],
    })
}
