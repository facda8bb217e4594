//! Quadrature kernels: generalized Gauss–Laguerre rules in probabilist
//! normalization, adaptive Gamma-density expectations, and spectrally
//! accurate trapezoid rules on the circle.
//!
//! All radial matrix elements in this crate reduce, after the substitution
//! `t = b0 r^2 / 2`, to expectations against the Gamma(alpha+1) density
//! `t^alpha e^{-t} / Gamma(alpha+1)`. Working with normalized weights keeps
//! every intermediate quantity O(1) even for angular momenta in the
//! thousands, where the raw moments overflow.

use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use statrs::function::gamma::ln_gamma;

/// Default starting order for adaptive expectations.
pub const ADAPTIVE_START_ORDER: usize = 24;
/// Hard cap on the adaptive order; beyond this the drift is reported as a
/// non-convergence signal.
pub const ADAPTIVE_MAX_ORDER: usize = 768;

/// Generalized Gauss–Laguerre rule for the weight `t^alpha e^{-t}` on
/// `(0, ∞)`, stored with weights normalized to sum to one. The rule then
/// computes expectations against the Gamma(alpha+1) probability density and
/// is exact for polynomials of degree `2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    /// Normalized weights, `sum(weights) == 1`.
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Golub–Welsch construction: nodes are the eigenvalues of the Jacobi
    /// matrix of the Laguerre recurrence (diagonal `2i + alpha + 1`,
    /// off-diagonal `sqrt(i (i + alpha))`), normalized weights the squared
    /// first components of the orthonormal eigenvectors.
    pub fn new(order: usize, alpha: f64) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidParameter(
                "Gauss-Laguerre order must be >= 1".into(),
            ));
        }
        if alpha <= -1.0 {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Laguerre alpha must be > -1, got {alpha}"
            )));
        }
        if order == 1 {
            return Ok(Self {
                alpha,
                nodes: vec![alpha + 1.0],
                weights: vec![1.0],
            });
        }
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for i in 0..order {
            jacobi[(i, i)] = 2.0 * i as f64 + alpha + 1.0;
            if i + 1 < order {
                let j = (i + 1) as f64;
                let off = (j * (j + alpha)).sqrt();
                jacobi[(i, i + 1)] = off;
                jacobi[(i + 1, i)] = off;
            }
        }
        let eigen = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let node = eigen.eigenvalues[i];
                let first = eigen.eigenvectors[(0, i)];
                (node, first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let (nodes, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        Ok(Self {
            alpha,
            nodes,
            weights,
        })
    }

    /// Expectation of `f` against the Gamma(alpha+1) density.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

fn table_cache() -> &'static Mutex<HashMap<(usize, u64), std::sync::Arc<GaussLaguerre>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), std::sync::Arc<GaussLaguerre>>>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached rule lookup. Rules are immutable and shared between threads.
pub fn cached_rule(order: usize, alpha: f64) -> Result<std::sync::Arc<GaussLaguerre>> {
    let key = (order, alpha.to_bits());
    if let Some(rule) = table_cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let rule = std::sync::Arc::new(GaussLaguerre::new(order, alpha)?);
    table_cache()
        .lock()
        .unwrap()
        .insert(key, rule.clone());
    Ok(rule)
}

/// Result of an adaptive Gamma expectation: the converged value, the last
/// inter-order drift, and whether the drift fell below tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Expectation {
    pub value: f64,
    pub drift: f64,
    pub converged: bool,
    pub order: usize,
}

/// Adaptive expectation of `f` against the Gamma(alpha+1) density: the rule
/// order is doubled until two consecutive estimates differ by less than
/// `tol · (abs_scale + |value|)`.
///
/// `abs_scale` is the natural magnitude of the integrand before external
/// normalization. When the result is a near-cancelling combination (e.g.
/// products of orthogonal polynomials), a purely relative test would chase
/// the roundoff floor forever; measuring against the integrand scale stops
/// at the achievable accuracy.
pub fn gamma_expectation_scaled<F: Fn(f64) -> f64>(
    alpha: f64,
    tol: f64,
    abs_scale: f64,
    f: F,
) -> Result<Expectation> {
    if !abs_scale.is_finite() {
        return Ok(Expectation {
            value: 0.0,
            drift: 0.0,
            converged: true,
            order: 0,
        });
    }
    let mut order = ADAPTIVE_START_ORDER;
    let mut prev = cached_rule(order, alpha)?.expectation(&f);
    loop {
        let next_order = order * 2;
        let value = cached_rule(next_order, alpha)?.expectation(&f);
        let drift = (value - prev).abs();
        if drift <= tol * (abs_scale + value.abs()) {
            return Ok(Expectation {
                value,
                drift,
                converged: true,
                order: next_order,
            });
        }
        if next_order >= 192 {
            // Integrand singularities just left of the support throttle the
            // global rule to sub-geometric convergence; the panel
            // integrator converges geometrically under subdivision and its
            // rule cache stays small.
            return gamma_expectation_piecewise_scaled(alpha, &[], tol, abs_scale, f);
        }
        prev = value;
        order = next_order;
    }
}

/// [`gamma_expectation_scaled`] with unit scale (plain relative test).
pub fn gamma_expectation<F: Fn(f64) -> f64>(alpha: f64, tol: f64, f: F) -> Result<Expectation> {
    gamma_expectation_scaled(alpha, tol, 1.0, f)
}

/// Same as [`gamma_expectation`] but escalates non-convergence to an error.
pub fn gamma_expectation_strict<F: Fn(f64) -> f64>(
    alpha: f64,
    tol: f64,
    context: &str,
    f: F,
) -> Result<f64> {
    let est = gamma_expectation(alpha, tol, f)?;
    if !est.converged {
        return Err(Error::QuadratureNonConvergence {
            context: context.to_string(),
            drift: est.drift,
            tol,
        });
    }
    Ok(est.value)
}

/// Gauss–Legendre rule of the given order on `[-1, 1]`, cached.
pub fn gauss_legendre(order: usize) -> std::sync::Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<(Vec<f64>, Vec<f64>)>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&order) {
        return rule.clone();
    }
    // Golub–Welsch for the Legendre recurrence: zero diagonal, off-diagonal
    // i / sqrt(4 i^2 - 1); weights 2 v_{0,i}^2.
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for i in 1..order {
        let fi = i as f64;
        let off = fi / (4.0 * fi * fi - 1.0).sqrt();
        jacobi[(i - 1, i)] = off;
        jacobi[(i, i - 1)] = off;
    }
    let eigen = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let v = eigen.eigenvectors[(0, i)];
            (eigen.eigenvalues[i], 2.0 * v * v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let rule = std::sync::Arc::new(pairs.into_iter().unzip());
    cache.lock().unwrap().insert(order, rule.clone());
    rule
}

/// Log of the Gamma(alpha+1) density `t^alpha e^{-t} / Gamma(alpha+1)`.
fn gamma_log_density(alpha: f64, t: f64) -> f64 {
    if alpha == 0.0 {
        -t - ln_gamma(alpha + 1.0)
    } else {
        alpha * t.ln() - t - ln_gamma(alpha + 1.0)
    }
}

/// Window outside of which the Gamma(alpha+1) density carries less than
/// roughly 1e-16 of its mass.
fn gamma_window(alpha: f64) -> (f64, f64) {
    let mean = alpha + 1.0;
    let width = 12.0 * mean.sqrt() + 35.0;
    ((mean - width).max(0.0), mean + width)
}

/// Fixed-resolution expectation of `f` against the Gamma(alpha+1) density
/// by composite Gauss–Legendre panels, with forced panel boundaries at the
/// given breakpoints. Handles integrands that are only piecewise smooth,
/// which defeats the global Gauss–Laguerre rules.
pub fn gamma_expectation_piecewise_fixed<F: Fn(f64) -> f64>(
    alpha: f64,
    breaks: &[f64],
    n_panels: usize,
    f: F,
) -> f64 {
    let (lo, hi) = gamma_window(alpha);
    let mut bounds: Vec<f64> = vec![lo];
    for &b in breaks {
        if b > lo && b < hi {
            bounds.push(b);
        }
    }
    bounds.push(hi);
    bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bounds.dedup();
    let rule = gauss_legendre(32);
    let (nodes, weights) = rule.as_ref();
    let h_target = (hi - lo) / n_panels as f64;
    let mut total = 0.0;
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let parts = ((b - a) / h_target).ceil().max(1.0) as usize;
        let dx = (b - a) / parts as f64;
        for p in 0..parts {
            let pa = a + p as f64 * dx;
            let half = 0.5 * dx;
            let mid = pa + half;
            for (x, wt) in nodes.iter().zip(weights.iter()) {
                let t = mid + half * x;
                let density = gamma_log_density(alpha, t).exp();
                if density > 0.0 {
                    total += wt * half * density * f(t);
                }
            }
        }
    }
    total
}

/// Adaptive version of [`gamma_expectation_piecewise_fixed`]: panel count
/// doubles until two consecutive estimates agree against the given scale.
pub fn gamma_expectation_piecewise_scaled<F: Fn(f64) -> f64>(
    alpha: f64,
    breaks: &[f64],
    tol: f64,
    abs_scale: f64,
    f: F,
) -> Result<Expectation> {
    if !abs_scale.is_finite() {
        return Ok(Expectation {
            value: 0.0,
            drift: 0.0,
            converged: true,
            order: 0,
        });
    }
    let mut n = 16;
    let mut prev = gamma_expectation_piecewise_fixed(alpha, breaks, n, &f);
    loop {
        let next = n * 2;
        let value = gamma_expectation_piecewise_fixed(alpha, breaks, next, &f);
        let drift = (value - prev).abs();
        if drift <= tol * (abs_scale + value.abs()) {
            return Ok(Expectation {
                value,
                drift,
                converged: true,
                order: next,
            });
        }
        if next >= 512 {
            return Ok(Expectation {
                value,
                drift,
                converged: false,
                order: next,
            });
        }
        prev = value;
        n = next;
    }
}

pub fn gamma_expectation_piecewise<F: Fn(f64) -> f64>(
    alpha: f64,
    breaks: &[f64],
    tol: f64,
    f: F,
) -> Result<Expectation> {
    gamma_expectation_piecewise_scaled(alpha, breaks, tol, 1.0, f)
}

/// Expectation against the Gamma(alpha+1) density, dispatching on whether
/// the integrand has breakpoints inside the mass window: smooth integrands
/// use the Gauss–Laguerre rules, piecewise ones the panel integrator.
pub fn gamma_expectation_with_breaks_scaled<F: Fn(f64) -> f64>(
    alpha: f64,
    breaks: &[f64],
    tol: f64,
    abs_scale: f64,
    f: F,
) -> Result<Expectation> {
    let (lo, hi) = gamma_window(alpha);
    if breaks.iter().any(|&b| b > lo && b < hi) {
        gamma_expectation_piecewise_scaled(alpha, breaks, tol, abs_scale, f)
    } else {
        gamma_expectation_scaled(alpha, tol, abs_scale, f)
    }
}

pub fn gamma_expectation_with_breaks<F: Fn(f64) -> f64>(
    alpha: f64,
    breaks: &[f64],
    tol: f64,
    f: F,
) -> Result<Expectation> {
    gamma_expectation_with_breaks_scaled(alpha, breaks, tol, 1.0, f)
}

/// Associated Laguerre polynomial `L_n^{alpha}(t)` by the stable upward
/// three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + alpha - t;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - t) * l - (kf + alpha) * lm1) / (kf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// Uniform trapezoid rule for `∫_0^{2π} f(θ) dθ`; spectrally accurate for
/// smooth periodic integrands.
pub fn trapezoid_circle<F: Fn(f64) -> f64>(n: usize, f: F) -> f64 {
    let h = std::f64::consts::TAU / n as f64;
    (0..n).map(|j| f(j as f64 * h)).sum::<f64>() * h
}

/// Trapezoid rule with doubling until the estimate is stable to `tol`
/// (relative). `n0` should be at least 8x the largest harmonic present.
pub fn trapezoid_circle_adaptive<F: Fn(f64) -> f64>(n0: usize, tol: f64, f: F) -> Result<f64> {
    let mut n = n0.max(16);
    let mut prev = trapezoid_circle(n, &f);
    for _ in 0..16 {
        n *= 2;
        let value = trapezoid_circle(n, &f);
        if (value - prev).abs() <= tol * (1.0 + value.abs()) {
            return Ok(value);
        }
        prev = value;
    }
    Err(Error::QuadratureNonConvergence {
        context: "trapezoid rule on the circle".into(),
        drift: prev,
        tol,
    })
}
