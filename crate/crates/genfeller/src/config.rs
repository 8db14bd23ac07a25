//! Experiment configuration (TOML).
//!
//! ```toml
//! experiment = "rayknight"
//! master_seed = 7
//! output = "out/rk"
//!
//! [interaction]
//! kind = "logistic"
//! theta = 1.0
//! gamma = 1.0
//!
//! [params]
//! x_targets = [1.0]
//! ds = 1e-4
//! dh = 0.02
//! replicates = 200
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use genfeller_core::{DerivativeMode, InteractionFunction};
use serde::{Deserialize, Serialize};

use crate::error::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Classify,
    Discrete,
    Renormalized,
    Forest,
    Diffusion,
    Rayknight,
    Convergence,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Classify => "classify",
            Experiment::Discrete => "discrete",
            Experiment::Renormalized => "renormalized",
            Experiment::Forest => "forest",
            Experiment::Diffusion => "diffusion",
            Experiment::Rayknight => "rayknight",
            Experiment::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InteractionName {
    #[default]
    Zero,
    Logistic,
    Linear,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeName {
    Analytic,
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    #[serde(default)]
    pub kind: InteractionName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Two-column CSV `(z, f(z))` on a uniform grid starting at 0; relative
    /// paths are resolved against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative: Option<DerivativeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl InteractionSpec {
    pub fn build(&self, base: &Path) -> Result<InteractionFunction, UsageError> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| UsageError::Config(format!("interaction.{name} is required for kind {:?}", self.kind)))
        };
        let mut f = match self.kind {
            InteractionName::Zero => InteractionFunction::zero(),
            InteractionName::Logistic => {
                InteractionFunction::logistic(need(self.theta, "theta")?, need(self.gamma, "gamma")?)?
            }
            InteractionName::Linear => InteractionFunction::linear(need(self.theta, "theta")?)?,
            InteractionName::Custom => {
                let rel = self
                    .table
                    .as_ref()
                    .ok_or_else(|| UsageError::Config("interaction.table is required for kind custom".into()))?;
                let path = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
                crate::io::read_table(&path)?
            }
        };
        match (self.derivative, self.derivative_step) {
            (Some(DerivativeName::Analytic), _) => f = f.with_derivative_mode(DerivativeMode::Analytic)?,
            (Some(DerivativeName::Central), h) | (None, h @ Some(_)) => {
                let h = h.unwrap_or(1e-6);
                f = f.with_derivative_mode(DerivativeMode::CentralDifference(h))?;
            }
            (None, None) => {}
        }
        if let Some(b) = self.beta {
            f = f.with_beta(b)?;
        }
        Ok(f)
    }
}

/// Numerical parameters; each experiment reads the ones it needs and
/// falls back to documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_targets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_cap: Option<f64>,
    /// Constant environment `z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<f64>,
    /// Fix the fold-to-local-time factor by a drift-free pilot run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_events: Option<u64>,
    /// Expected classification (`subcritical`, `supercritical`,
    /// `inconclusive`); a mismatch is a Fail verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub interaction: InteractionSpec,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        toml::from_str(text).map_err(|e| UsageError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}
