//! Run configuration: a TOML file with named sections, overridden by flags.
//!
//! Every field has a default, so an empty file (or no file) is a valid run of
//! the default parameter set `γ0 = 3e-4`, `T = 0.01`, `ω_s = sqrt(2γ0/π)`.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use gqbm_core::{DiscretizationScheme, GaussianMoments, SpectralModel, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub state: StateConfig,
    pub oracle: OracleConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
    pub checks: CheckConfig,
}

/// `ω_s` is either a number or the string `"paper-default"`, meaning
/// `sqrt(2γ0Λ/π)`, for which the renormalised frequency vanishes at `α = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaS {
    Value(f64),
    Named(DefaultOmega),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefaultOmega {
    #[serde(rename = "paper-default")]
    PaperDefault,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub gamma0: f64,
    pub alpha: f64,
    pub temperature: f64,
    pub omega_s: OmegaS,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: f64,
    pub n_steps: usize,
}

/// Initial Gaussian state of the system for `evolve`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    pub mean_re: f64,
    pub mean_im: f64,
    pub delta_n: f64,
    pub delta_s_re: f64,
    pub delta_s_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub modes: usize,
    pub omega_max: f64,
    /// `"gauss-legendre"` or `"linear-midpoint"`.
    pub scheme: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Run the independent second routes (two-time Volterra `V`, integral form
    /// of the diffusion matrix, finite-difference `V̇`) and report deviations.
    pub crosscheck: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { gamma0: 3e-4, alpha: 1.0, temperature: 0.01, omega_s: OmegaS::Named(DefaultOmega::PaperDefault) }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { t_end: 20.0, n_steps: 4000 }
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { modes: 2000, omega_max: 20.0, scheme: DiscretizationScheme::GaussLegendre.id().to_string() }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { alphas: vec![0.0, 0.5, 1.0] }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("gqbm-out") }
    }
}

/// Values given on the command line (or through `GQBM_*` variables); each
/// replaces the corresponding file value when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub gamma0: Option<f64>,
    pub temperature: Option<f64>,
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub oracle_modes: Option<usize>,
    pub crosscheck: bool,
}

fn invalid(name: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{name}: {}", reason.into()))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.output.dir = v.clone();
        }
        if let Some(v) = o.alpha {
            self.model.alpha = v;
        }
        if let Some(v) = o.gamma0 {
            self.model.gamma0 = v;
        }
        if let Some(v) = o.temperature {
            self.model.temperature = v;
        }
        if let Some(v) = o.t_end {
            self.grid.t_end = v;
        }
        if let Some(v) = o.steps {
            self.grid.n_steps = v;
        }
        if let Some(v) = o.oracle_modes {
            self.oracle.modes = v;
        }
        self.checks.crosscheck |= o.crosscheck;
    }

    /// Check every field before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.model()?;
        self.omega_s()?;
        self.grid()?;
        self.initial_state()?;
        self.scheme()?;
        if self.oracle.modes == 0 {
            return Err(invalid("oracle.modes", "must be ≥ 1"));
        }
        if !(self.oracle.omega_max > 0.0) || !self.oracle.omega_max.is_finite() {
            return Err(invalid("oracle.omega_max", "must be finite and > 0"));
        }
        if self.sweep.alphas.is_empty() {
            return Err(invalid("sweep.alphas", "must not be empty"));
        }
        for &a in &self.sweep.alphas {
            self.model.with_alpha(a).map_err(|e| invalid("sweep.alphas", e.to_string()))?;
        }
        Ok(())
    }

    pub fn model(&self) -> Result<SpectralModel, CliError> {
        self.model.with_alpha(self.model.alpha)
    }

    pub fn omega_s(&self) -> Result<f64, CliError> {
        match self.model.omega_s {
            OmegaS::Value(w) if w >= 0.0 && w.is_finite() => Ok(w),
            OmegaS::Value(w) => Err(invalid("model.omega_s", format!("must be finite and ≥ 0, got {w}"))),
            OmegaS::Named(DefaultOmega::PaperDefault) => Ok((2.0 * self.model.gamma0 / std::f64::consts::PI).sqrt()),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.grid.t_end, self.grid.n_steps).map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn initial_state(&self) -> Result<GaussianMoments, CliError> {
        let s = &self.state;
        GaussianMoments::new(
            gqbm_core::C64::new(s.mean_re, s.mean_im),
            s.delta_n,
            gqbm_core::C64::new(s.delta_s_re, s.delta_s_im),
        )
        .map_err(|e| invalid("state", e.to_string()))
    }

    pub fn scheme(&self) -> Result<DiscretizationScheme, CliError> {
        [DiscretizationScheme::GaussLegendre, DiscretizationScheme::LinearMidpoint]
            .into_iter()
            .find(|s| s.id() == self.oracle.scheme)
            .ok_or_else(|| invalid("oracle.scheme", format!("unknown scheme {:?}", self.oracle.scheme)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serialisable")
    }
}

impl ModelConfig {
    pub fn with_alpha(&self, alpha: f64) -> Result<SpectralModel, CliError> {
        SpectralModel::ohmic(self.gamma0, alpha, self.temperature).map_err(|e| invalid("model", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
        assert!((c.omega_s().unwrap() - (6e-4 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sections_and_named_frequency_parse() {
        let c = RunConfig::from_toml(
            "[model]\nalpha = 0.5\nomega_s = \"paper-default\"\n[grid]\nt_end = 5.0\nn_steps = 100\n[sweep]\nalphas = [0.0, 1.0]\n",
        )
        .unwrap();
        assert_eq!(c.model.alpha, 0.5);
        assert_eq!(c.grid.n_steps, 100);
        assert_eq!(c.sweep.alphas, vec![0.0, 1.0]);
        let c = RunConfig::from_toml("[model]\nomega_s = 0.3\n").unwrap();
        assert_eq!(c.omega_s().unwrap(), 0.3);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::from_toml("[model]\ngama0 = 1e-4\n").is_err());
        assert!(RunConfig::from_toml("[extra]\nx = 1\n").is_err());
        assert!(RunConfig::from_toml("[model]\nomega_s = \"fast\"\n").is_err());
        let mut c = RunConfig::default();
        c.model.gamma0 = -1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.oracle.scheme = "simpson".into();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.state.delta_s_re = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut c = RunConfig::from_toml("[model]\nalpha = 0.2\n").unwrap();
        c.apply(&Overrides { alpha: Some(0.7), steps: Some(123), crosscheck: true, ..Default::default() });
        assert_eq!(c.model.alpha, 0.7);
        assert_eq!(c.grid.n_steps, 123);
        assert!(c.checks.crosscheck);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.model.omega_s = OmegaS::Value(0.25);
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let back = RunConfig::from_toml(&RunConfig::default().to_toml()).unwrap();
        assert_eq!(back, RunConfig::default());
    }
}
