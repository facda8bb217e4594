//! Scalar potentials `U(x) = e^{i phase} U0(θ) f(r)` with power decay, and
//! the induced off-diagonal 2×2 matrix potential.
//!
//! `U0` is a trigonometric polynomial (nonnegative for the localization /
//! counting experiments), `f` either the regular profile `(1+r²)^{-m/2}` or
//! a pure power tail `r^{-m}` with a small smooth patch at the origin.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

/// Default patch radius for the pure-power tail. Inside the patch the
/// profile is replaced by a C¹ quadratic cap; at this radius the cap
/// perturbs zero-mode diagonal elements by less than 1e-8 even at angular
/// momentum 1, so tail-asymptotics oracles see the exact power law.
pub const DEFAULT_POWER_TAIL_CUT: f64 = 1e-4;

/// Real trigonometric polynomial `a0 + Σ_k (a_k cos kθ + b_k sin kθ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularProfile {
    /// `cos_coeffs[0] = a0`, `cos_coeffs[k] = a_k`.
    pub cos_coeffs: Vec<f64>,
    /// `sin_coeffs[k-1] = b_k`.
    pub sin_coeffs: Vec<f64>,
}

impl AngularProfile {
    pub fn constant(a0: f64) -> Self {
        Self {
            cos_coeffs: vec![a0],
            sin_coeffs: vec![],
        }
    }

    /// Parses expressions like `1 + 0.5*cos(2θ) - 0.1*sin(θ)`. Accepts
    /// `θ`, `theta` or `t` for the angle and an optional integer harmonic.
    pub fn parse(input: &str) -> Result<Self> {
        let cleaned: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(Error::InvalidParameter("empty angular profile".into()));
        }
        let mut cos_coeffs = vec![0.0f64];
        let mut sin_coeffs: Vec<f64> = vec![];
        // Split into signed terms.
        let mut terms: Vec<String> = Vec::new();
        let mut current = String::new();
        for (i, c) in cleaned.chars().enumerate() {
            if (c == '+' || c == '-') && i > 0 && !current.is_empty() {
                let prev = current.chars().last().unwrap();
                if prev != 'e' && prev != 'E' {
                    terms.push(current.clone());
                    current.clear();
                }
            }
            current.push(c);
        }
        if !current.is_empty() {
            terms.push(current);
        }
        for term in terms {
            let (sign, body) = match term.strip_prefix('-') {
                Some(rest) => (-1.0, rest),
                None => (1.0, term.strip_prefix('+').unwrap_or(&term)),
            };
            let parse_num = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("cannot parse coefficient `{s}` in `{input}`"))
                })
            };
            let lower = body.to_ascii_lowercase();
            if let Some(pos) = lower.find("cos").or_else(|| lower.find("sin")) {
                let is_cos = &lower[pos..pos + 3] == "cos";
                let coeff_str = body[..pos].trim_end_matches('*');
                let coeff = if coeff_str.is_empty() {
                    1.0
                } else {
                    parse_num(coeff_str)?
                };
                let arg = &lower[pos + 3..];
                let arg = arg
                    .trim_start_matches('(')
                    .trim_end_matches(')')
                    .trim_end_matches("theta")
                    .trim_end_matches('θ')
                    .trim_end_matches('t');
                let arg = arg.trim_end_matches('*');
                let harmonic: usize = if arg.is_empty() {
                    1
                } else {
                    arg.parse().map_err(|_| {
                        Error::InvalidParameter(format!(
                            "cannot parse harmonic `{arg}` in `{input}`"
                        ))
                    })?
                };
                if harmonic == 0 {
                    return Err(Error::InvalidParameter(
                        "harmonic index must be >= 1 (use a constant term instead)".into(),
                    ));
                }
                if is_cos {
                    if cos_coeffs.len() <= harmonic {
                        cos_coeffs.resize(harmonic + 1, 0.0);
                    }
                    cos_coeffs[harmonic] += sign * coeff;
                } else {
                    if sin_coeffs.len() < harmonic {
                        sin_coeffs.resize(harmonic, 0.0);
                    }
                    sin_coeffs[harmonic - 1] += sign * coeff;
                }
            } else {
                cos_coeffs[0] += sign * parse_num(body)?;
            }
        }
        Ok(Self {
            cos_coeffs,
            sin_coeffs,
        })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.cos_coeffs[0];
        for (k, &a) in self.cos_coeffs.iter().enumerate().skip(1) {
            v += a * (k as f64 * theta).cos();
        }
        for (k, &b) in self.sin_coeffs.iter().enumerate() {
            v += b * ((k + 1) as f64 * theta).sin();
        }
        v
    }

    /// Largest harmonic index present.
    pub fn degree(&self) -> usize {
        let dc = self.cos_coeffs.len().saturating_sub(1);
        let ds = self.sin_coeffs.len();
        dc.max(ds)
    }

    /// Coefficients `c_ν` of the exponential representation
    /// `U0(θ) = Σ_ν c_ν e^{iνθ}`, `ν = -degree..=degree`.
    pub fn exp_coeffs(&self) -> Vec<(i64, Complex64)> {
        let d = self.degree() as i64;
        let mut out = Vec::with_capacity((2 * d + 1) as usize);
        for nu in -d..=d {
            let k = nu.unsigned_abs() as usize;
            let c = if nu == 0 {
                Complex64::new(self.cos_coeffs[0], 0.0)
            } else {
                let a = self.cos_coeffs.get(k).copied().unwrap_or(0.0);
                let b = self.sin_coeffs.get(k - 1).copied().unwrap_or(0.0);
                // cos kθ = (e^{ikθ}+e^{-ikθ})/2, sin kθ = (e^{ikθ}-e^{-ikθ})/2i
                if nu > 0 {
                    Complex64::new(a / 2.0, -b / 2.0)
                } else {
                    Complex64::new(a / 2.0, b / 2.0)
                }
            };
            out.push((nu, c));
        }
        out
    }

    /// Pointwise square, again a trigonometric polynomial (degree doubles).
    pub fn squared(&self) -> AngularProfile {
        let coeffs = self.exp_coeffs();
        let d = self.degree() as i64;
        let mut cos_coeffs = vec![0.0; (2 * d + 1) as usize];
        let mut sin_coeffs = vec![0.0; (2 * d) as usize];
        for nu in 0..=(2 * d) {
            // c_ν of the square: Σ_k c_k c_{ν-k}
            let mut c = Complex64::new(0.0, 0.0);
            for &(k, ck) in &coeffs {
                let other = nu - k;
                if let Some(&(_, co)) = coeffs.iter().find(|&&(i, _)| i == other) {
                    c += ck * co;
                }
            }
            if nu == 0 {
                cos_coeffs[0] = c.re;
            } else {
                // real profile: c_ν = (a - i b)/2
                cos_coeffs[nu as usize] = 2.0 * c.re;
                sin_coeffs[(nu - 1) as usize] = -2.0 * c.im;
            }
        }
        while cos_coeffs.len() > 1 && cos_coeffs.last() == Some(&0.0) && sin_coeffs.last() == Some(&0.0)
        {
            cos_coeffs.pop();
            sin_coeffs.pop();
        }
        AngularProfile {
            cos_coeffs,
            sin_coeffs,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn is_zero(&self) -> bool {
        self.cos_coeffs.iter().all(|&a| a == 0.0) && self.sin_coeffs.iter().all(|&b| b == 0.0)
    }

    /// Minimum over a dense grid (trig polynomials cannot hide features
    /// between samples at 16x the degree).
    pub fn min_on_circle(&self) -> f64 {
        let n = 64.max(16 * self.degree().max(1));
        (0..n)
            .map(|i| self.eval(std::f64::consts::TAU * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_on_circle(&self) -> f64 {
        let n = 64.max(16 * self.degree().max(1));
        (0..n)
            .map(|i| self.eval(std::f64::consts::TAU * i as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫_0^{2π} U0(θ)^p dθ` by adaptive trapezoid (spectrally accurate).
    pub fn power_integral(&self, p: f64) -> Result<f64> {
        let n0 = 64.max(8 * self.degree().max(1));
        quad::trapezoid_circle_adaptive(n0, 1e-12, |th| {
            let v = self.eval(th);
            if v <= 0.0 {
                0.0
            } else {
                v.powf(p)
            }
        })
    }

    pub fn derivative_eval(&self, theta: f64) -> f64 {
        let mut v = 0.0;
        for (k, &a) in self.cos_coeffs.iter().enumerate().skip(1) {
            v -= a * k as f64 * (k as f64 * theta).sin();
        }
        for (k, &b) in self.sin_coeffs.iter().enumerate() {
            let kk = (k + 1) as f64;
            v += b * kk * (kk * theta).cos();
        }
        v
    }
}

/// Radial decay profile.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialForm {
    /// `(1 + r²)^{-m/2}` — smooth everywhere with the exact required tail.
    Regular,
    /// `r^{-m}` beyond `r_cut`, a C¹ quadratic cap inside. Only meant for
    /// tail-asymptotics oracles; the cap keeps the origin finite.
    PowerTail { r_cut: f64 },
}

/// Scalar potential `U(x) = e^{i phase} U0(θ) f(r)`; the matrix potential
/// is `[[0, conj(U)], [U, 0]]` with pointwise eigenvalues `±|U(x)|`.
#[derive(Debug, Clone)]
pub struct Potential {
    pub u0: AngularProfile,
    /// Decay exponent `m > 0`: `|U(x)| = O(⟨x⟩^{-m})`.
    pub m: f64,
    pub form: RadialForm,
    /// Constant complex phase; nonzero phase makes `U` nonreal.
    pub phase: f64,
}

impl Potential {
    pub fn new(u0: AngularProfile, m: f64, form: RadialForm, phase: f64) -> Result<Self> {
        if !m.is_finite() || m <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "decay exponent m must be > 0, got {m}"
            )));
        }
        if let RadialForm::PowerTail { r_cut } = form {
            if !(r_cut > 0.0) || !r_cut.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "power-tail cut radius must be positive, got {r_cut}"
                )));
            }
        }
        Ok(Self { u0, m, form, phase })
    }

    pub fn regular(u0: AngularProfile, m: f64) -> Result<Self> {
        Self::new(u0, m, RadialForm::Regular, 0.0)
    }

    /// Radial factor `f(r)`.
    pub fn radial(&self, r: f64) -> f64 {
        match self.form {
            RadialForm::Regular => (1.0 + r * r).powf(-self.m / 2.0),
            RadialForm::PowerTail { r_cut } => {
                if r >= r_cut {
                    r.powf(-self.m)
                } else {
                    // C¹ cap: value and slope match at r_cut.
                    let scale = r_cut.powf(-self.m);
                    scale * (1.0 + 0.5 * self.m * (1.0 - (r / r_cut).powi(2)))
                }
            }
        }
    }

    /// d f / d r, used for the gradient bound of the decay checks.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        match self.form {
            RadialForm::Regular => {
                -self.m * r * (1.0 + r * r).powf(-self.m / 2.0 - 1.0)
            }
            RadialForm::PowerTail { r_cut } => {
                if r >= r_cut {
                    -self.m * r.powf(-self.m - 1.0)
                } else {
                    -self.m * r_cut.powf(-self.m) * r / (r_cut * r_cut)
                }
            }
        }
    }

    /// Non-smooth radii of the radial factor, in the quadrature variable
    /// `t = b0 r^2/2`.
    pub fn radial_breaks_t(&self, b0: f64) -> Vec<f64> {
        match self.form {
            RadialForm::Regular => vec![],
            RadialForm::PowerTail { r_cut } => vec![b0 * r_cut * r_cut / 2.0],
        }
    }

    pub fn is_radial(&self) -> bool {
        self.u0.is_constant()
    }

    pub fn is_real(&self) -> bool {
        self.phase == 0.0
    }

    pub fn is_zero(&self) -> bool {
        self.u0.is_zero()
    }

    /// `sup |U|` (attained at r = 0 for the regular form, at the cap for
    /// the power tail).
    pub fn sup_norm(&self) -> f64 {
        let ang = self.u0.max_on_circle().abs().max(self.u0.min_on_circle().abs());
        let rad = match self.form {
            RadialForm::Regular => 1.0,
            RadialForm::PowerTail { r_cut } => r_cut.powf(-self.m) * (1.0 + 0.5 * self.m),
        };
        ang * rad
    }

    /// `U(x)` at a point.
    pub fn evaluate(&self, x: [f64; 2]) -> Complex64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let theta = x[1].atan2(x[0]);
        let modulus = self.u0.eval(theta) * self.radial(r);
        modulus * Complex64::from_polar(1.0, self.phase)
    }

    /// The 2×2 matrix potential `V(x) = [[0, conj U], [U, 0]]`.
    pub fn matrix_v(&self, x: [f64; 2]) -> [[Complex64; 2]; 2] {
        let u = self.evaluate(x);
        [[Complex64::ZERO, u.conj()], [u, Complex64::ZERO]]
    }

    /// Pointwise eigenvalues `(-|U(x)|, +|U(x)|)` of `V(x)`.
    pub fn matrix_v_eigenvalues(&self, x: [f64; 2]) -> (f64, f64) {
        let n = self.evaluate(x).norm();
        (-n, n)
    }

    /// Exponential angular coefficients of `U` (phase included).
    pub fn angular_coeffs(&self) -> Vec<(i64, Complex64)> {
        let phase = Complex64::from_polar(1.0, self.phase);
        self.u0
            .exp_coeffs()
            .into_iter()
            .map(|(nu, c)| (nu, phase * c))
            .collect()
    }

    /// Decomposition of `|U|² = W(I)`: squared angular profile and squared
    /// radial factor (the phase drops out).
    pub fn modulus_squared(&self) -> (AngularProfile, impl Fn(f64) -> f64 + '_) {
        (self.u0.squared(), move |r: f64| {
            let f = self.radial(r);
            f * f
        })
    }

    /// Checks the decay/regularity clauses used by the counting
    /// experiments and reports per-clause margins.
    pub fn validate_assumption_a(&self) -> AssumptionReport {
        let n_theta = 64.max(8 * self.u0.degree().max(1));
        let radii: Vec<f64> = (0..200).map(|i| 0.05 + i as f64 * 0.25).collect();

        // (1) U real and nonnegative.
        let min_u0 = self.u0.min_on_circle();
        let nonnegative = ClauseReport {
            passed: self.is_real() && min_u0 >= -1e-12 && !self.u0.is_zero(),
            margin: if self.is_real() { min_u0 } else { f64::NEG_INFINITY },
        };

        // (2) |U(x)| <= C ⟨x⟩^{-m}: report the smallest admissible C.
        let mut c_value = 0.0f64;
        for &r in &radii {
            let w = (1.0 + r * r).powf(self.m / 2.0);
            for i in 0..n_theta {
                let th = std::f64::consts::TAU * i as f64 / n_theta as f64;
                c_value = c_value.max((self.u0.eval(th) * self.radial(r)).abs() * w);
            }
        }
        c_value = c_value.max(self.sup_norm());
        let decay_value = ClauseReport {
            passed: c_value.is_finite(),
            margin: c_value,
        };

        // (3) |∇U(x)| <= C' ⟨x⟩^{-m-1}.
        let mut c_grad = 0.0f64;
        for &r in &radii {
            let w = (1.0 + r * r).powf((self.m + 1.0) / 2.0);
            for i in 0..n_theta {
                let th = std::f64::consts::TAU * i as f64 / n_theta as f64;
                let dr = self.u0.eval(th) * self.radial_derivative(r);
                let dth = self.u0.derivative_eval(th) * self.radial(r) / r.max(1e-6);
                c_grad = c_grad.max((dr * dr + dth * dth).sqrt() * w);
            }
        }
        let decay_gradient = ClauseReport {
            passed: c_grad.is_finite(),
            margin: c_grad,
        };

        // (4) U(x) |x|^m -> U0(θ): worst deviation at a large radius and
        // the trend between two radii.
        let (r1, r2) = (50.0, 200.0);
        let dev = |r: f64| -> f64 {
            (0..n_theta)
                .map(|i| {
                    let th = std::f64::consts::TAU * i as f64 / n_theta as f64;
                    (self.u0.eval(th) * self.radial(r) * r.powf(self.m) - self.u0.eval(th)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (d1, d2) = (dev(r1), dev(r2));
        let radial_limit = ClauseReport {
            passed: d2 < 0.05 && d2 < d1,
            margin: d2,
        };

        AssumptionReport {
            nonnegative,
            decay_value,
            decay_gradient,
            radial_limit,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClauseReport {
    pub passed: bool,
    /// Clause-specific worst-case margin (estimated constant, minimum
    /// value or limiting deviation).
    pub margin: f64,
}

/// Per-clause report of the decay/regularity validation.
#[derive(Debug, Clone, Copy)]
pub struct AssumptionReport {
    pub nonnegative: ClauseReport,
    pub decay_value: ClauseReport,
    pub decay_gradient: ClauseReport,
    pub radial_limit: ClauseReport,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.nonnegative.passed
            && self.decay_value.passed
            && self.decay_gradient.passed
            && self.radial_limit.passed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parser_handles_constants_and_harmonics() {
        let p = AngularProfile::parse("1 + 0.5*cos(2θ)").unwrap();
        assert_eq!(p.cos_coeffs, vec![1.0, 0.0, 0.5]);
        assert!(p.sin_coeffs.is_empty());
        let p = AngularProfile::parse("2.5").unwrap();
        assert!(p.is_constant());
        assert_relative_eq!(p.eval(1.0), 2.5);
        let p = AngularProfile::parse("1 - 0.25*sin(3theta) + cos(t)").unwrap();
        assert_relative_eq!(p.eval(0.7), 1.0 - 0.25 * (2.1f64).sin() + (0.7f64).cos());
        assert!(AngularProfile::parse("1 + cos(xθ)").is_err());
        assert!(AngularProfile::parse("").is_err());
    }

    #[test]
    fn evaluate_regular_form() {
        // U0 ≡ 1, m = 2: U(0) = 1, U(|x|=1) = 1/2.
        let pot = Potential::regular(AngularProfile::constant(1.0), 2.0).unwrap();
        assert_relative_eq!(pot.evaluate([0.0, 0.0]).re, 1.0, max_relative = 1e-15);
        assert_relative_eq!(pot.evaluate([1.0, 0.0]).re, 0.5, max_relative = 1e-15);
        // U0 = 1 + cos²θ = 1.5 + 0.5 cos 2θ, m = 1, x = (1, 0): 2/√2.
        let u0 = AngularProfile::parse("1.5 + 0.5*cos(2θ)").unwrap();
        let pot = Potential::regular(u0, 1.0).unwrap();
        assert_relative_eq!(
            pot.evaluate([1.0, 0.0]).re,
            2.0 / 2.0f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn rejects_nonpositive_decay() {
        let err = Potential::regular(AngularProfile::constant(1.0), -1.0).unwrap_err();
        assert!(err.to_string().contains("m must be > 0"));
    }

    #[test]
    fn matrix_v_eigenvalue_pairs() {
        let pot = Potential::regular(AngularProfile::constant(1.0), 2.0).unwrap();
        // |U| = 1/2 at |x| = 1.
        let (lo, hi) = pot.matrix_v_eigenvalues([1.0, 0.0]);
        assert_relative_eq!(lo, -0.5, max_relative = 1e-14);
        assert_relative_eq!(hi, 0.5, max_relative = 1e-14);
        // Zero potential.
        let zero = Potential::regular(AngularProfile::constant(0.0), 2.0).unwrap();
        assert_eq!(zero.matrix_v_eigenvalues([0.3, 0.4]), (0.0, 0.0));
        // Complex U = i 0.3: eigenvalues ±0.3.
        let pot = Potential::new(
            AngularProfile::constant(0.3),
            2.0,
            RadialForm::Regular,
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let (lo, hi) = pot.matrix_v_eigenvalues([0.0, 0.0]);
        assert_relative_eq!(lo, -0.3, max_relative = 1e-14);
        assert_relative_eq!(hi, 0.3, max_relative = 1e-14);
    }

    #[test]
    fn matrix_v_is_hermitian_traceless_and_matches_2x2_solve() {
        let pot = Potential::new(
            AngularProfile::parse("1 + 0.3*cos(θ)").unwrap(),
            1.5,
            RadialForm::Regular,
            0.7,
        )
        .unwrap();
        for &x in &[[0.2, 0.1], [1.0, -2.0], [-0.5, 0.4]] {
            let v = pot.matrix_v(x);
            assert_eq!(v[0][0], Complex64::ZERO);
            assert_eq!(v[1][1], Complex64::ZERO);
            assert!((v[0][1] - v[1][0].conj()).norm() < 1e-15);
            // Direct 2x2 Hermitian eigensolve: [[0, w̄],[w, 0]] has
            // eigenvalues ±|w| via the characteristic polynomial λ² = |w|².
            let w = v[1][0];
            let direct = w.norm();
            let (lo, hi) = pot.matrix_v_eigenvalues(x);
            assert_relative_eq!(hi, direct, epsilon = 1e-14);
            assert_relative_eq!(lo, -direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn assumption_report_regular_passes() {
        let pot = Potential::regular(AngularProfile::constant(1.0), 2.0).unwrap();
        let rep = pot.validate_assumption_a();
        assert!(rep.passed(), "{rep:?}");
        // The smallest admissible constant for (1+r²)^{-1} is exactly 1.
        assert!(rep.decay_value.margin <= 1.0 + 1e-9);
    }

    #[test]
    fn assumption_report_fails_for_complex_phase() {
        let pot = Potential::new(
            AngularProfile::constant(1.0),
            2.0,
            RadialForm::Regular,
            0.4,
        )
        .unwrap();
        let rep = pot.validate_assumption_a();
        assert!(!rep.nonnegative.passed);
    }

    #[test]
    fn assumption_report_fails_for_sign_changing_profile() {
        let pot = Potential::regular(AngularProfile::parse("cos(θ)").unwrap(), 2.0).unwrap();
        let rep = pot.validate_assumption_a();
        assert!(!rep.nonnegative.passed);
    }

    #[test]
    fn squared_profile_matches_pointwise() {
        let u0 = AngularProfile::parse("1 + 0.5*cos(2θ) - 0.3*sin(θ)").unwrap();
        let sq = u0.squared();
        for i in 0..32 {
            let th = std::f64::consts::TAU * i as f64 / 32.0;
            assert_relative_eq!(sq.eval(th), u0.eval(th).powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn exp_coeffs_reconstruct_profile() {
        let u0 = AngularProfile::parse("0.5 + cos(θ) + 0.25*sin(2θ)").unwrap();
        for i in 0..16 {
            let th = 0.3 + i as f64 * 0.4;
            let v: Complex64 = u0
                .exp_coeffs()
                .iter()
                .map(|&(nu, c)| c * Complex64::from_polar(1.0, nu as f64 * th))
                .sum();
            assert_relative_eq!(v.re, u0.eval(th), epsilon = 1e-13);
            assert!(v.im.abs() < 1e-13);
        }
    }

    #[test]
    fn power_tail_cap_is_c1() {
        let pot = Potential::new(
            AngularProfile::constant(1.0),
            2.0,
            RadialForm::PowerTail { r_cut: 0.1 },
            0.0,
        )
        .unwrap();
        let eps = 1e-9;
        let below = pot.radial(0.1 - eps);
        let above = pot.radial(0.1 + eps);
        assert_relative_eq!(below, above, max_relative = 1e-6);
        let d_below = pot.radial_derivative(0.1 - eps);
        let d_above = pot.radial_derivative(0.1 + eps);
        assert_relative_eq!(d_below, d_above, max_relative = 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn decay_bound_holds(xr in -30.0f64..30.0, xt in -30.0f64..30.0, m in 0.2f64..4.0) {
            let pot = Potential::regular(AngularProfile::parse("1 + 0.5*cos(2θ)").unwrap(), m).unwrap();
            let x = [xr, xt];
            let xsq = 1.0 + xr * xr + xt * xt;
            // |U| ⟨x⟩^m <= max U0.
            let lhs = pot.evaluate(x).norm() * xsq.powf(m / 2.0);
            proptest::prop_assert!(lhs <= 1.5 + 1e-9);
        }
    }
}
