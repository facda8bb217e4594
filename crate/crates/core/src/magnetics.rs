//! Admissible magnetic fields `b = b0 + btilde(r)`, the radial Poisson
//! solve for the field potential, the spectral floor `zeta`, and the
//! orthonormal zero-mode / Landau bases.
//!
//! Fields are restricted to a constant part plus a compactly supported
//! radial perturbation. That is the class where the kernel of `H_-` has an
//! explicit orthogonal basis: with the symmetric gauge and the radial total
//! potential `phi(r) = b0 r^2/4 + phitilde(r)`, the zero modes are
//! `z^k e^{-phi}` and distinct angular harmonics are automatically
//! orthogonal.

use crate::error::{Error, Result};
use crate::quad::{self, Expectation};

/// Tolerance for the per-state normalization quadrature; estimates at two
/// consecutive orders must agree below this, else the state is reported as
/// a truncation error.
pub const NORM_DRIFT_TOL: f64 = 1e-10;

/// Compactly supported radial perturbation profile `btilde(r)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// `btilde == 0` (constant field).
    Zero,
    /// `btilde(r) = height` for `r <= r0`, zero outside.
    Step { r0: f64, height: f64 },
    /// Piecewise-linear profile through `(r_i, v_i)` knots; the first knot
    /// must sit at `r = 0` and the profile vanishes beyond the last knot.
    Table(Vec<(f64, f64)>),
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::Zero => Ok(()),
            RadialProfile::Step { r0, height } => {
                if !r0.is_finite() || *r0 <= 0.0 || !height.is_finite() {
                    return Err(Error::RejectedInput(format!(
                        "step profile needs finite r0 > 0 and finite height, got r0={r0}, height={height}"
                    )));
                }
                Ok(())
            }
            RadialProfile::Table(pts) => {
                if pts.len() < 2 {
                    return Err(Error::RejectedInput(
                        "tabulated profile needs at least two knots".into(),
                    ));
                }
                if pts[0].0 != 0.0 {
                    return Err(Error::RejectedInput(
                        "tabulated profile must start at r = 0 (values for r < first knot \
                         would make btilde non-integrable against r dr)"
                            .into(),
                    ));
                }
                for w in pts.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::RejectedInput(
                            "tabulated profile radii must be strictly increasing".into(),
                        ));
                    }
                }
                if pts.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
                    return Err(Error::RejectedInput(
                        "tabulated profile contains non-finite entries".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Zero => 0.0,
            RadialProfile::Step { r0, height } => {
                if r <= *r0 {
                    *height
                } else {
                    0.0
                }
            }
            RadialProfile::Table(pts) => {
                if r < 0.0 || r > pts.last().unwrap().0 {
                    return 0.0;
                }
                let idx = pts
                    .partition_point(|(ri, _)| *ri <= r)
                    .saturating_sub(1)
                    .min(pts.len() - 2);
                let (r0, v0) = pts[idx];
                let (r1, v1) = pts[idx + 1];
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
        }
    }

    /// Radius beyond which the profile vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            RadialProfile::Zero => 0.0,
            RadialProfile::Step { r0, .. } => *r0,
            RadialProfile::Table(pts) => pts.last().unwrap().0,
        }
    }

    /// `moment(r) = ∫_0^r s btilde(s) ds`, in closed form per segment.
    pub fn moment(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Zero => 0.0,
            RadialProfile::Step { r0, height } => {
                if r <= 0.0 {
                    return 0.0;
                }
                let rc = r.min(*r0);
                height * rc * rc / 2.0
            }
            RadialProfile::Table(pts) => {
                if r <= 0.0 {
                    return 0.0;
                }
                let mut acc = 0.0;
                for w in pts.windows(2) {
                    let (ra, va) = w[0];
                    let (rb, vb) = w[1];
                    let upper = r.min(rb);
                    if upper <= ra {
                        break;
                    }
                    let slope = (vb - va) / (rb - ra);
                    let a = va - slope * ra;
                    // ∫ s (a + slope·s) ds over [ra, upper]
                    acc += a * (upper * upper - ra * ra) / 2.0
                        + slope * (upper.powi(3) - ra.powi(3)) / 3.0;
                    if upper < rb {
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Net flux `∫_0^∞ s btilde(s) ds`. Nonzero flux means the solved
    /// potential grows logarithmically past the support.
    pub fn flux(&self) -> f64 {
        self.moment(self.support_radius())
    }

    /// Breakpoints where the profile (or its derivative) jumps; finite
    /// difference checks must stay clear of these.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::Zero => vec![],
            RadialProfile::Step { r0, .. } => vec![*r0],
            RadialProfile::Table(pts) => pts.iter().map(|(r, _)| *r).collect(),
        }
    }
}

/// Solved radial potential `phitilde` with `Δ phitilde = btilde` on
/// `(0, ∞)`: `phitilde'(r) = moment(r)/r` integrated outward from zero.
/// Past the support the profile continues exactly as
/// `phitilde(R) + flux · ln(r/R)`.
#[derive(Debug, Clone)]
pub struct FieldPotential {
    btilde: RadialProfile,
    /// Cumulative `phitilde` values at the profile knots.
    knot_values: Vec<(f64, f64)>,
    support_radius: f64,
    flux: f64,
    r_max: f64,
    osc: f64,
}

impl FieldPotential {
    pub fn osc(&self) -> f64 {
        self.osc
    }

    pub fn flux(&self) -> f64 {
        self.flux
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Closed-form increment `phitilde(r) - phitilde(ra)` within the table
    /// segment starting at knot `idx`.
    fn table_segment_increment(pts: &[(f64, f64)], moment_at: f64, idx: usize, r: f64) -> f64 {
        let (ra, va) = pts[idx];
        let (rb, vb) = pts[idx + 1];
        let slope = (vb - va) / (rb - ra);
        let a = va - slope * ra;
        let c_log = moment_at - a * ra * ra / 2.0 - slope * ra.powi(3) / 3.0;
        let log_term = if ra > 0.0 { c_log * (r / ra).ln() } else { 0.0 };
        log_term + a * (r * r - ra * ra) / 4.0 + slope * (r.powi(3) - ra.powi(3)) / 9.0
    }

    /// `phitilde(r)`, exact piecewise closed form.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.support_radius {
            let base = self.knot_values.last().map(|&(_, v)| v).unwrap_or(0.0);
            if self.support_radius <= 0.0 {
                return 0.0;
            }
            return base + self.flux * (r / self.support_radius).ln();
        }
        match &self.btilde {
            RadialProfile::Zero => 0.0,
            RadialProfile::Step { height, .. } => height * r * r / 4.0,
            RadialProfile::Table(pts) => {
                // Strict comparison: r exactly at a knot falls in the
                // segment that ends there.
                let idx = pts
                    .partition_point(|(ri, _)| *ri < r)
                    .saturating_sub(1)
                    .min(pts.len() - 2);
                let moment_at = self.btilde.moment(pts[idx].0);
                self.knot_values[idx].1
                    + Self::table_segment_increment(pts, moment_at, idx, r)
            }
        }
    }

    /// `phitilde'(r) = moment(r)/r`.
    pub fn derivative(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.btilde.moment(r) / r
    }
}

/// Solves the radial Poisson equation `Δ phitilde = btilde` outward from
/// zero and reports the oscillation of the profile over `[0, r_max]`.
pub fn solve_radial_poisson(btilde: &RadialProfile, r_max: f64) -> Result<FieldPotential> {
    btilde.validate()?;
    if !r_max.is_finite() || r_max <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "r_max must be finite and positive, got {r_max}"
        )));
    }
    let support = btilde.support_radius();
    if support > r_max {
        return Err(Error::RejectedInput(format!(
            "profile support radius {support} exceeds r_max {r_max}"
        )));
    }
    let mut phi = FieldPotential {
        btilde: btilde.clone(),
        knot_values: Vec::new(),
        support_radius: support,
        flux: btilde.flux(),
        r_max,
        osc: 0.0,
    };
    // Cumulative knot values, built forward so each segment increment only
    // refers to already-known values.
    match btilde {
        RadialProfile::Zero => {}
        RadialProfile::Step { r0, height } => {
            phi.knot_values.push((0.0, 0.0));
            phi.knot_values.push((*r0, height * r0 * r0 / 4.0));
        }
        RadialProfile::Table(pts) => {
            phi.knot_values.push((pts[0].0, 0.0));
            for idx in 0..pts.len() - 1 {
                let prev = phi.knot_values[idx].1;
                let moment_at = btilde.moment(pts[idx].0);
                let inc =
                    FieldPotential::table_segment_increment(pts, moment_at, idx, pts[idx + 1].0);
                phi.knot_values.push((pts[idx + 1].0, prev + inc));
            }
        }
    }
    // Oscillation over a dense sample of [0, r_max]; extrema of phitilde
    // are second-order flat, so dense sampling is accurate.
    let n = 16384;
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for i in 0..=n {
        let r = r_max * i as f64 / n as f64;
        let v = phi.eval(r);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    phi.osc = hi - lo;
    Ok(phi)
}

/// Max over `points` of the five-point finite-difference residual
/// `|Δ phitilde - btilde|` with `Δ = d²/dr² + (1/r) d/dr` on radial
/// functions. Points within `2h` of a profile breakpoint are skipped.
pub fn laplacian_residual(
    phi: &FieldPotential,
    btilde: &RadialProfile,
    points: &[f64],
    h: f64,
) -> f64 {
    let breaks = btilde.breakpoints();
    let mut worst = 0.0f64;
    for &r in points {
        if r <= 2.0 * h {
            continue;
        }
        if breaks.iter().any(|&b| (r - b).abs() <= 2.0 * h) {
            continue;
        }
        let f = |x: f64| phi.eval(x);
        let second = (-f(r - 2.0 * h) + 16.0 * f(r - h) - 30.0 * f(r) + 16.0 * f(r + h)
            - f(r + 2.0 * h))
            / (12.0 * h * h);
        let first =
            (f(r - 2.0 * h) - 8.0 * f(r - h) + 8.0 * f(r + h) - f(r + 2.0 * h)) / (12.0 * h);
        let residual = (second + first / r - btilde.eval(r)).abs();
        worst = worst.max(residual);
    }
    worst
}

/// Admissible magnetic field `b = b0 + btilde` with its solved potential,
/// oscillation and spectral floor `zeta = 2 b0 exp(-2 osc)`.
#[derive(Debug, Clone)]
pub struct MagneticField {
    pub b0: f64,
    pub btilde: RadialProfile,
    pub phitilde: FieldPotential,
    pub osc: f64,
    pub zeta: f64,
}

impl MagneticField {
    pub fn constant(b0: f64) -> Result<Self> {
        Self::new(b0, RadialProfile::Zero, 1.0)
    }

    pub fn new(b0: f64, btilde: RadialProfile, r_max: f64) -> Result<Self> {
        if !b0.is_finite() || b0 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "field strength b0 must be positive, got {b0}"
            )));
        }
        let phitilde = solve_radial_poisson(&btilde, r_max)?;
        let osc = phitilde.osc();
        let zeta = 2.0 * b0 * (-2.0 * osc).exp();
        Ok(Self {
            b0,
            btilde,
            phitilde,
            osc,
            zeta,
        })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.btilde, RadialProfile::Zero)
    }

    /// Lower edge `zeta = 2 b0 exp(-2 osc(phitilde))` of the nonzero
    /// spectrum of the unperturbed operator.
    pub fn spectral_floor(&self) -> f64 {
        self.zeta
    }

    /// Total radial potential `phi(r) = b0 r^2/4 + phitilde(r)`.
    pub fn total_potential(&self, r: f64) -> f64 {
        self.b0 * r * r / 4.0 + self.phitilde.eval(r)
    }
}

pub fn spectral_floor(field: &MagneticField) -> f64 {
    field.spectral_floor()
}

/// Admissibility diagnostics for a field, produced for reporting.
#[derive(Debug, Clone)]
pub struct FieldReport {
    pub sup_btilde: f64,
    pub sup_btilde_prime: f64,
    pub flux: f64,
    pub osc: f64,
    pub zeta: f64,
    /// Zero net flux means phitilde stays bounded on all of `[0, ∞)`;
    /// otherwise it grows logarithmically and osc refers to the sampled
    /// range only.
    pub phitilde_bounded: bool,
    pub max_laplacian_residual: f64,
}

pub fn field_report(field: &MagneticField) -> FieldReport {
    let r_max = field.phitilde.r_max();
    let n = 512;
    let mut sup_b = 0.0f64;
    let mut sup_bp = 0.0f64;
    let h = r_max / 4096.0;
    for i in 0..=n {
        let r = r_max * i as f64 / n as f64;
        sup_b = sup_b.max(field.btilde.eval(r).abs());
        let bp = (field.btilde.eval(r + h) - field.btilde.eval((r - h).max(0.0))) / (2.0 * h);
        if bp.is_finite() {
            sup_bp = sup_bp.max(bp.abs());
        }
    }
    let pts: Vec<f64> = (1..200).map(|i| r_max * i as f64 / 200.0).collect();
    let res = laplacian_residual(&field.phitilde, &field.btilde, &pts, 1e-2);
    FieldReport {
        sup_btilde: sup_b,
        sup_btilde_prime: sup_bp,
        flux: field.phitilde.flux(),
        osc: field.osc,
        zeta: field.zeta,
        phitilde_bounded: field.phitilde.flux() == 0.0,
        max_laplacian_residual: res,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    ZeroMode,
    Landau,
}

/// One basis state: Landau level index, angular momentum `m`, radial index
/// `n_r = min(level, j)`, and the analytic `H∓` ladder values.
#[derive(Debug, Clone, Copy)]
pub struct BasisState {
    pub level: usize,
    /// Angular momentum `m`; for Landau states `m = j - level` with
    /// `j = 0..K-1`, for zero modes `m = k >= 0`.
    pub angular: i64,
    pub radial_index: usize,
    pub h_minus: f64,
    /// `H_+` eigenvalue; `None` for zero modes of a nonconstant field,
    /// where the state is not an `H_+` eigenstate.
    pub h_plus: Option<f64>,
}

/// Orthonormal state family on which all operator compressions are built.
#[derive(Debug, Clone)]
pub struct Basis {
    pub kind: BasisKind,
    pub b0: f64,
    /// K: number of angular indices.
    pub count_angular: usize,
    /// Q: number of levels (1 for zero modes).
    pub count_levels: usize,
    pub states: Vec<BasisState>,
    pub field: MagneticField,
    /// Zero-mode normalization expectations `E_k[e^{-2 phitilde}]`
    /// (identically 1 for a constant field and for Landau bases).
    pub norm_expectations: Vec<f64>,
    /// Largest quadrature drift seen while normalizing.
    pub max_norm_drift: f64,
}

impl Basis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn hminus_eigenvalues(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.h_minus).collect()
    }

    pub fn hplus_eigenvalues(&self) -> Vec<Option<f64>> {
        self.states.iter().map(|s| s.h_plus).collect()
    }

    /// Zero-mode weight `w(t) = exp(-2 phitilde(r(t)))` in the quadrature
    /// variable `t = b0 r^2 / 2`.
    fn weight_at(&self, t: f64) -> f64 {
        if self.kind == BasisKind::Landau || self.field.is_constant() {
            1.0
        } else {
            (-2.0 * self.field.phitilde.eval((2.0 * t / self.b0).sqrt())).exp()
        }
    }

    /// Non-smooth points of the weight in the `t` variable.
    pub fn weight_breaks(&self) -> Vec<f64> {
        if self.kind == BasisKind::Landau || self.field.is_constant() {
            return vec![];
        }
        self.field
            .btilde
            .breakpoints()
            .iter()
            .map(|&r| self.b0 * r * r / 2.0)
            .collect()
    }

    /// Unnormalized squared norm of zero-mode state `k`:
    /// `2π/b0 · (2/b0)^k · k! · E_k[w]`. Overflows for large `k`; use
    /// [`Basis::log_squared_norm`] there.
    pub fn squared_norm(&self, index: usize) -> f64 {
        self.log_squared_norm(index).exp()
    }

    pub fn log_squared_norm(&self, index: usize) -> f64 {
        assert_eq!(self.kind, BasisKind::ZeroMode);
        let k = index as f64;
        (std::f64::consts::TAU / self.b0).ln()
            + k * (2.0 / self.b0).ln()
            + quad::ln_gamma(k + 1.0)
            + self.norm_expectations[index].ln()
    }

    /// Gram matrix computed by explicit 2d quadrature (radial rule of the
    /// given order, angular trapezoid). This is the independent oracle used
    /// to verify orthonormality; it does not shortcut via selection rules.
    pub fn gram_matrix(
        &self,
        radial_order: usize,
        angular_order: usize,
    ) -> Result<nalgebra::DMatrix<num_complex::Complex64>> {
        use num_complex::Complex64;
        let n = self.len();
        let mut gram = nalgebra::DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let si = self.states[i];
                let sj = self.states[j];
                let radial = self.radial_product_fixed(i, j, radial_order, |_| 1.0)?;
                let dm = (sj.angular - si.angular) as f64;
                let ang_re = quad::trapezoid_circle(angular_order, |th| (dm * th).cos())
                    / std::f64::consts::TAU;
                let ang_im = quad::trapezoid_circle(angular_order, |th| (dm * th).sin())
                    / std::f64::consts::TAU;
                gram[(i, j)] = Complex64::new(ang_re * radial, ang_im * radial);
            }
        }
        Ok(gram)
    }

    /// Radial overlap `∫ u_i(t) u_j(t) g(t) dt` of the orthonormal radial
    /// profiles against an extra factor `g`, at a fixed resolution (rule
    /// order for smooth weights, panel count for piecewise ones). Serves as
    /// the doubled-order oracle in consistency tests.
    pub fn radial_product_fixed<G: Fn(f64) -> f64>(
        &self,
        i: usize,
        j: usize,
        order: usize,
        g: G,
    ) -> Result<f64> {
        let (alpha, pref) = self.radial_pair(i, j);
        let si = self.states[i];
        let sj = self.states[j];
        let breaks = self.weight_breaks();
        let integrand = |t: f64| self.radial_extra(si, sj, t) * g(t) * self.weight_at(t);
        let raw = if breaks.is_empty() {
            quad::cached_rule(order, alpha)?.expectation(integrand)
        } else {
            quad::gamma_expectation_piecewise_fixed(alpha, &breaks, order, integrand)
        };
        Ok(pref * raw)
    }

    /// Adaptive radial overlap with drift reporting. `extra_breaks` lists
    /// non-smooth points of `g` in the `t` variable. Convergence is
    /// measured on the normalized scale (drift scaled by the prefactor):
    /// orthogonal-polynomial cancellations make the raw expectation far
    /// smaller than the integrand.
    pub fn radial_product<G: Fn(f64) -> f64>(
        &self,
        i: usize,
        j: usize,
        tol: f64,
        extra_breaks: &[f64],
        g: G,
    ) -> Result<Expectation> {
        let (alpha, pref) = self.radial_pair(i, j);
        let si = self.states[i];
        let sj = self.states[j];
        let mut breaks = self.weight_breaks();
        breaks.extend_from_slice(extra_breaks);
        let mut est =
            quad::gamma_expectation_with_breaks_scaled(alpha, &breaks, tol, pref.recip(), |t| {
                self.radial_extra(si, sj, t) * g(t) * self.weight_at(t)
            })?;
        est.value *= pref;
        est.drift *= pref.abs();
        Ok(est)
    }

    /// Quadrature exponent `alpha` and log-space normalization prefactor
    /// for the state pair `(i, j)`.
    fn radial_pair(&self, i: usize, j: usize) -> (f64, f64) {
        let si = self.states[i];
        let sj = self.states[j];
        match self.kind {
            BasisKind::ZeroMode => {
                let (ki, kj) = (si.angular as f64, sj.angular as f64);
                let s = 0.5 * (ki + kj);
                let ln_pref = quad::ln_gamma(s + 1.0)
                    - 0.5 * quad::ln_gamma(ki + 1.0)
                    - 0.5 * quad::ln_gamma(kj + 1.0)
                    - 0.5 * (self.norm_expectations[i] * self.norm_expectations[j]).ln();
                (s, ln_pref.exp())
            }
            BasisKind::Landau => {
                let (mi, mj) = (
                    si.angular.unsigned_abs() as f64,
                    sj.angular.unsigned_abs() as f64,
                );
                let (ni, nj) = (si.radial_index as f64, sj.radial_index as f64);
                let alpha = 0.5 * (mi + mj);
                let ln_pref = quad::ln_gamma(alpha + 1.0)
                    + 0.5 * (quad::ln_gamma(ni + 1.0) + quad::ln_gamma(nj + 1.0))
                    - 0.5 * (quad::ln_gamma(ni + mi + 1.0) + quad::ln_gamma(nj + mj + 1.0));
                (alpha, ln_pref.exp())
            }
        }
    }

    /// Laguerre factors of the radial integrand left over after the weight
    /// `t^alpha e^{-t}` is absorbed into the rule (1 for zero modes).
    fn radial_extra(&self, si: BasisState, sj: BasisState, t: f64) -> f64 {
        match self.kind {
            BasisKind::ZeroMode => 1.0,
            BasisKind::Landau => {
                let li = quad::laguerre(si.radial_index, si.angular.unsigned_abs() as f64, t);
                let lj = quad::laguerre(sj.radial_index, sj.angular.unsigned_abs() as f64, t);
                li * lj
            }
        }
    }
}

/// Builds the orthonormal zero-mode family `z^k e^{-phi}`, `k = 0..K-1`.
/// Orthogonality is automatic for radial `phi`; normalization constants are
/// computed by adaptive Gauss–Laguerre quadrature with a drift check.
pub fn build_zero_mode_basis(field: &MagneticField, k_count: usize) -> Result<Basis> {
    if k_count < 1 {
        return Err(Error::InvalidParameter(
            "zero-mode count K must be >= 1".into(),
        ));
    }
    let constant = field.is_constant();
    let h_plus = if constant { Some(2.0 * field.b0) } else { None };
    let states: Vec<BasisState> = (0..k_count)
        .map(|k| BasisState {
            level: 0,
            angular: k as i64,
            radial_index: 0,
            h_minus: 0.0,
            h_plus,
        })
        .collect();
    let b0 = field.b0;
    let mut norm_expectations = vec![1.0; k_count];
    let mut max_drift = 0.0f64;
    if !constant {
        use rayon::prelude::*;
        let breaks: Vec<f64> = field
            .btilde
            .breakpoints()
            .iter()
            .map(|&r| b0 * r * r / 2.0)
            .collect();
        let results: Vec<Result<Expectation>> = (0..k_count)
            .into_par_iter()
            .map(|k| {
                quad::gamma_expectation_with_breaks(k as f64, &breaks, NORM_DRIFT_TOL, |t| {
                    (-2.0 * field.phitilde.eval((2.0 * t / b0).sqrt())).exp()
                })
            })
            .collect();
        for (k, res) in results.into_iter().enumerate() {
            let est = res?;
            if !est.converged {
                return Err(Error::QuadratureNonConvergence {
                    context: format!("zero-mode norm at angular momentum {k}"),
                    drift: est.drift,
                    tol: NORM_DRIFT_TOL,
                });
            }
            max_drift = max_drift.max(est.drift);
            norm_expectations[k] = est.value;
        }
    }
    Ok(Basis {
        kind: BasisKind::ZeroMode,
        b0,
        count_angular: k_count,
        count_levels: 1,
        states,
        field: field.clone(),
        norm_expectations,
        max_norm_drift: max_drift,
    })
}

/// Builds the constant-field Landau family: `K` angular indices per level,
/// `Q` levels, state `(q, j)` carrying angular momentum `m = j - q`. The
/// `H_-` ladder is `2 b0 q` and the `H_+` ladder `2 b0 (q + 1)`, stored
/// analytically.
pub fn build_landau_basis(b0: f64, k_count: usize, q_count: usize) -> Result<Basis> {
    if b0 <= 0.0 || !b0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "field strength b0 must be positive, got {b0}"
        )));
    }
    if k_count < 1 || q_count < 1 {
        return Err(Error::InvalidParameter("Landau basis needs K, Q >= 1".into()));
    }
    let mut states = Vec::with_capacity(k_count * q_count);
    for q in 0..q_count {
        for j in 0..k_count {
            states.push(BasisState {
                level: q,
                angular: j as i64 - q as i64,
                radial_index: q.min(j),
                h_minus: 2.0 * b0 * q as f64,
                h_plus: Some(2.0 * b0 * (q + 1) as f64),
            });
        }
    }
    Ok(Basis {
        kind: BasisKind::Landau,
        b0,
        count_angular: k_count,
        count_levels: q_count,
        states,
        field: MagneticField::constant(b0)?,
        norm_expectations: vec![1.0; k_count * q_count],
        max_norm_drift: 0.0,
    })
}

/// Radial product between two Landau-type radial profiles given directly by
/// `(radial_index, |m|)`; used for cross-level matrix elements where one
/// side ranges outside a stored basis.
pub fn landau_radial_product<G: Fn(f64) -> f64>(
    n1: usize,
    mu1: f64,
    n2: usize,
    mu2: f64,
    tol: f64,
    g: G,
) -> Result<Expectation> {
    let alpha = 0.5 * (mu1 + mu2);
    let ln_pref = quad::ln_gamma(alpha + 1.0)
        + 0.5 * (quad::ln_gamma(n1 as f64 + 1.0) + quad::ln_gamma(n2 as f64 + 1.0))
        - 0.5 * (quad::ln_gamma(n1 as f64 + mu1 + 1.0) + quad::ln_gamma(n2 as f64 + mu2 + 1.0));
    let pref = ln_pref.exp();
    let mut est = quad::gamma_expectation_scaled(alpha, tol, pref.recip(), |t| {
        quad::laguerre(n1, mu1, t) * quad::laguerre(n2, mu2, t) * g(t)
    })?;
    est.value *= pref;
    est.drift *= pref.abs();
    Ok(est)
}
