//! Experiment configuration: flat TOML with one section per module.
//! Parsing is strict (unknown keys rejected) and serializing a parsed
//! config reproduces it exactly, so config files double as provenance.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use paulilab::magnetics::{MagneticField, RadialProfile};
use paulilab::pauli::Window;
use paulilab::potential::{AngularProfile, Potential, RadialForm, DEFAULT_POWER_TAIL_CUT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldSpec,
    pub potential: PotentialSpec,
    pub coupling: CouplingSpec,
    pub truncation: TruncationSpec,
    pub window: WindowSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub b0: f64,
    /// `constant`, `step` or `table`.
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_height: Option<f64>,
    /// Knots `(radius, value)` for tabulated profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
}

fn default_profile() -> String {
    "constant".into()
}

fn default_r_max() -> f64 {
    40.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// Trigonometric polynomial, e.g. `"1 + 0.5*cos(2θ)"`.
    pub u0: String,
    pub m: f64,
    /// `regular` or `power-tail`.
    #[serde(default = "default_form")]
    pub form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_cut: Option<f64>,
    #[serde(default)]
    pub phase: f64,
}

fn default_form() -> String {
    "regular".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub e: f64,
    /// Optional sweep; pipelines run each entry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub k: usize,
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub r0: f64,
    pub r: f64,
    /// Threshold grid for the counting pipelines.
    #[serde(default = "default_r_lo")]
    pub r_lo: f64,
    #[serde(default = "default_r_hi")]
    pub r_hi: f64,
    #[serde(default = "default_r_points")]
    pub r_points: usize,
}

fn default_r_lo() -> f64 {
    1e-3
}

fn default_r_hi() -> f64 {
    1e-2
}

fn default_r_points() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Seed recorded in artifacts and used by any randomized diagnostics.
    #[serde(default)]
    pub seed: u64,
}

fn default_dir() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("config parse failed")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.field.b0 > 0.0) {
            bail!("field.b0 must be > 0 (got {})", self.field.b0);
        }
        if !(self.potential.m > 0.0) {
            bail!(
                "potential.m: decay exponent m must be > 0 for |U| = O(<x>^-m) (got {})",
                self.potential.m
            );
        }
        match self.field.profile.as_str() {
            "constant" | "step" | "table" => {}
            other => bail!("field.profile must be constant/step/table, got `{other}`"),
        }
        match self.potential.form.as_str() {
            "regular" | "power-tail" => {}
            other => bail!("potential.form must be regular/power-tail, got `{other}`"),
        }
        if self.truncation.k < 1 || self.truncation.q < 1 {
            bail!("truncation.k and truncation.q must be >= 1");
        }
        if !(self.window.r > 0.0 && self.window.r < self.window.r0) {
            bail!(
                "window needs 0 < r < r0, got r = {}, r0 = {}",
                self.window.r,
                self.window.r0
            );
        }
        if !(self.window.r_lo > 0.0 && self.window.r_hi > self.window.r_lo) {
            bail!("window grid needs 0 < r_lo < r_hi");
        }
        // r0 e² < ζ/2 with ζ <= 2 b0; the exact ζ is checked again after
        // the Poisson solve.
        let worst_e = self
            .coupling
            .e_list
            .iter()
            .copied()
            .chain([self.coupling.e])
            .fold(0.0f64, f64::max);
        if self.window.r0 * worst_e * worst_e >= self.field.b0 {
            bail!(
                "window.r0 · e² = {} reaches the spectral half-gap b0 = {}",
                self.window.r0 * worst_e * worst_e,
                self.field.b0
            );
        }
        Ok(())
    }

    pub fn build_field(&self) -> anyhow::Result<MagneticField> {
        let profile = match self.field.profile.as_str() {
            "constant" => RadialProfile::Zero,
            "step" => RadialProfile::Step {
                r0: self
                    .field
                    .step_r0
                    .context("field.step_r0 required for a step profile")?,
                height: self
                    .field
                    .step_height
                    .context("field.step_height required for a step profile")?,
            },
            "table" => RadialProfile::Table(
                self.field
                    .table
                    .clone()
                    .context("field.table required for a tabulated profile")?,
            ),
            other => bail!("unknown profile `{other}`"),
        };
        Ok(MagneticField::new(self.field.b0, profile, self.field.r_max)?)
    }

    pub fn build_potential(&self) -> anyhow::Result<Potential> {
        let u0 = AngularProfile::parse(&self.potential.u0)?;
        let form = match self.potential.form.as_str() {
            "regular" => RadialForm::Regular,
            "power-tail" => RadialForm::PowerTail {
                r_cut: self.potential.r_cut.unwrap_or(DEFAULT_POWER_TAIL_CUT),
            },
            other => bail!("unknown radial form `{other}`"),
        };
        Ok(Potential::new(u0, self.potential.m, form, self.potential.phase)?)
    }

    pub fn window(&self) -> anyhow::Result<Window> {
        Ok(Window::new(self.window.r0, self.window.r)?)
    }

    pub fn couplings(&self) -> Vec<f64> {
        if self.coupling.e_list.is_empty() {
            vec![self.coupling.e]
        } else {
            self.coupling.e_list.clone()
        }
    }

    pub fn r_grid(&self) -> Vec<f64> {
        let n = self.window.r_points.max(2);
        (0..n)
            .map(|i| {
                self.window.r_lo
                    * (self.window.r_hi / self.window.r_lo).powf(i as f64 / (n - 1) as f64)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[field]
b0 = 1.0
profile = "constant"

[potential]
u0 = "1 + 0.5*cos(2θ)"
m = 2.0

[coupling]
e = 0.1

[truncation]
k = 64
q = 4

[window]
r0 = 0.1
r = 0.01

[output]
dir = "out"
seed = 7
"#;

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let text = cfg.to_toml();
        let cfg2 = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg, cfg2);
        // And a second round for good measure.
        assert_eq!(cfg2.to_toml(), text);
    }

    #[test]
    fn rejects_negative_decay() {
        let bad = SAMPLE.replace("m = 2.0", "m = -1.0");
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("m must be > 0"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_with_location() {
        let bad = SAMPLE.replace("seed = 7", "seed = 7\nbogus = 1");
        let err = format!("{:?}", ExperimentConfig::parse(&bad).unwrap_err());
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn builds_domain_objects() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let field = cfg.build_field().unwrap();
        assert!(field.is_constant());
        let pot = cfg.build_potential().unwrap();
        assert!(!pot.is_radial());
        assert_eq!(cfg.couplings(), vec![0.1]);
        assert_eq!(cfg.r_grid().len(), 6);
    }
}
