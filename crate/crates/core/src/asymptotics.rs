//! Counting functions and their asymptotics: `n₊(r, L)`, the constant-field
//! integrated density of states, the accumulation constant `C_m`, power-law
//! fits on log-log axes, and plateau detection for stable count
//! comparisons.

use crate::error::{Error, Result};
use crate::potential::AngularProfile;

/// Sampled counting function `r ↦ n₊(r, L)`: thresholds descending, counts
/// nondecreasing.
#[derive(Debug, Clone)]
pub struct CountingFunction {
    pub thresholds: Vec<f64>,
    pub counts: Vec<usize>,
    pub source: String,
}

impl CountingFunction {
    /// Exact counting function of a finite spectrum. Sampled at every
    /// distinct eigenvalue and at the midpoints between consecutive
    /// distinct eigenvalues, so constancy plateaus are visible.
    pub fn from_spectrum(spectrum: &[f64], source: impl Into<String>) -> Self {
        let mut positive: Vec<f64> = spectrum.iter().copied().filter(|&v| v > 0.0).collect();
        positive.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut distinct: Vec<f64> = Vec::new();
        for &v in &positive {
            if distinct.last().map_or(true, |&d| (d - v).abs() > 1e-14 * d.abs().max(1e-300)) {
                distinct.push(v);
            }
        }
        let mut thresholds = Vec::with_capacity(2 * distinct.len());
        for (i, &v) in distinct.iter().enumerate() {
            thresholds.push(v);
            if i + 1 < distinct.len() {
                thresholds.push(0.5 * (v + distinct[i + 1]));
            }
        }
        let counts = thresholds.iter().map(|&r| n_plus(spectrum, r)).collect();
        Self {
            thresholds,
            counts,
            source: source.into(),
        }
    }

    /// Counting function sampled on an explicit threshold grid.
    pub fn from_grid(spectrum: &[f64], grid: &[f64], source: impl Into<String>) -> Self {
        let mut thresholds: Vec<f64> = grid.to_vec();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let counts = thresholds.iter().map(|&r| n_plus(spectrum, r)).collect();
        Self {
            thresholds,
            counts,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Checks monotonicity: counts nondecreasing as thresholds descend.
    pub fn is_monotone(&self) -> bool {
        self.counts.windows(2).all(|w| w[1] >= w[0])
    }
}

/// `n₊(r, L) = #{eigenvalues of L >= r}` for `r > 0` on a finite spectrum.
pub fn n_plus(spectrum: &[f64], r: f64) -> usize {
    assert!(r > 0.0, "n_plus thresholds must be positive");
    spectrum.iter().filter(|&&v| v >= r).count()
}

/// Constant-field integrated density of states
/// `g(t) = (b0/2π) #{q >= 0 : t - 2 b0 q > 0}`; a level lying exactly at
/// `t` is not counted (open condition).
pub fn ids_constant_field(b0: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let levels = (t / (2.0 * b0)).ceil() as usize;
    // q ranges over 0..levels with 2 b0 q < t strictly; ceil handles the
    // boundary: t exactly on a level keeps that level out.
    let exact_boundary = (t / (2.0 * b0)).fract() == 0.0;
    let count = if exact_boundary {
        (t / (2.0 * b0)) as usize
    } else {
        levels
    };
    b0 / std::f64::consts::TAU * count as f64
}

/// Accumulation constant `C_m = (b0 / 4π) ∫_{S¹} U0(θ)^{2/m} dθ`.
pub fn constant_cm(u0: &AngularProfile, m: f64, b0: f64) -> Result<f64> {
    if m <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "decay exponent m must be > 0, got {m}"
        )));
    }
    if u0.is_zero() {
        return Ok(0.0);
    }
    let integral = u0.power_integral(2.0 / m)?;
    Ok(b0 / (4.0 * std::f64::consts::PI) * integral)
}

/// Least-squares power-law fit `n(r) ≈ prefactor · r^{exponent}` over a
/// threshold window.
#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub max_relative_residual: f64,
    pub points_used: usize,
}

/// Fits `log n₊` against `log r` on the thresholds inside
/// `[window.0, window.1]` whose counts are at least 5. Needs at least 10
/// such thresholds and a non-degenerate count range.
pub fn fit_power_law(cf: &CountingFunction, window: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "fit window needs 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    let pts: Vec<(f64, f64)> = cf
        .thresholds
        .iter()
        .zip(cf.counts.iter())
        .filter(|&(&r, &c)| r >= lo && r <= hi && c >= 5)
        .map(|(&r, &c)| (r.ln(), (c as f64).ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::FitNotPossible(format!(
            "{} usable thresholds in the window, need >= 10",
            pts.len()
        )));
    }
    let first = pts[0].1;
    if pts.iter().all(|&(_, y)| (y - first).abs() < 1e-12) {
        return Err(Error::FitNotPossible(
            "counts constant over the window".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::FitNotPossible("degenerate threshold spread".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut max_rel = 0.0f64;
    for &(x, y) in &pts {
        let model = slope * x + intercept;
        max_rel = max_rel.max(((y - model).exp() - 1.0).abs());
    }
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        max_relative_residual: max_rel,
        points_used: pts.len(),
    })
}

/// Thresholds in the interior of maximal constancy intervals of the
/// counting function (spectral gaps), descending. A run with a nonzero
/// count is bounded above (the count drops past the top eigenvalue), so
/// only the lowest run — whose lower boundary is invisible — is excluded.
pub fn plateau_sequence(cf: &CountingFunction) -> Vec<f64> {
    let n = cf.len();
    if n == 0 {
        return vec![];
    }
    let mut plateaus = Vec::new();
    let mut run_start = 0usize;
    for i in 1..=n {
        let run_ends = i == n || cf.counts[i] != cf.counts[run_start];
        if run_ends {
            let bounded_above = run_start > 0 || cf.counts[run_start] > 0;
            let bounded_below = i < n;
            if bounded_above && bounded_below {
                // deeper interior sample of the run (for spectrum-derived
                // functions this is the gap midpoint, not the eigenvalue)
                let idx = run_start + (i - run_start) / 2;
                plateaus.push(cf.thresholds[idx.min(i - 1)]);
            }
            run_start = i;
        }
    }
    plateaus
}

/// Thresholds where the count sits in `[min_count, max_count]` — the range
/// where truncation-edge effects are excluded and the statistics are
/// meaningful.
pub fn resolvable_thresholds(
    cf: &CountingFunction,
    min_count: usize,
    max_count: usize,
) -> Vec<f64> {
    cf.thresholds
        .iter()
        .zip(cf.counts.iter())
        .filter(|&(_, &c)| c >= min_count && c <= max_count)
        .map(|(&r, _)| r)
        .collect()
}
