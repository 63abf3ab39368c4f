//! TOML experiment configuration.
//!
//! ```toml
//! [experiment]
//! id = "random-i-m5"
//! horizons = [1000, 5000]
//! trials = 100
//! master_seed = 1
//!
//! [model]
//! kind = "random-input-i"
//! m = 5
//!
//! [[policies]]
//! algorithm = "non-degenerate"
//! overrides = { c0 = 0.1, c1 = 2.0, c2 = 0.2, c3 = 5.0, c4 = 0.5 }
//!
//! [[policies]]
//! algorithm = "baseline-olp"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::SolverOpts;
use crate::harness::{ExperimentSpec, TraceRequest};
use crate::model::{
    build_hard_instance, BoundsParams, FiniteSupportSpec, InputModel, ModelError,
    NonDegeneracyParams, OrderType, ReplenishmentDist,
};
use crate::policies::{PolicyConfig, PolicyError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("invalid policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKindConfig {
    RandomInputI,
    #[serde(rename = "random-input-ii")]
    RandomInputII,
    FiniteHard,
    FiniteSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKindConfig,
    /// Number of resources for the random models.
    #[serde(default)]
    pub m: Option<usize>,
    /// Clamp Normal draws at the declared six-sigma bounds.
    #[serde(default)]
    pub truncate: bool,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub bounds: Option<BoundsParams>,
    #[serde(default)]
    pub nondeg: Option<NonDegeneracyParams>,
    #[serde(default)]
    pub types: Vec<OrderType>,
    #[serde(default)]
    pub probs: Vec<f64>,
    #[serde(default)]
    pub replenishment: Option<ReplenishmentDist>,
    #[serde(default)]
    pub mu_lower: Option<f64>,
    #[serde(default)]
    pub stability_radius: Option<f64>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<InputModel, ConfigError> {
        let need_m = || {
            self.m
                .ok_or_else(|| ConfigError::Invalid("random models need `m`".into()))
        };
        let mut model = match self.kind {
            ModelKindConfig::RandomInputI => InputModel::random_input_i(need_m()?)?,
            ModelKindConfig::RandomInputII => InputModel::random_input_ii(need_m()?, self.truncate)?,
            ModelKindConfig::FiniteHard => build_hard_instance(),
            ModelKindConfig::FiniteSupport => {
                let missing = |f: &str| ConfigError::Invalid(format!("finite-support model needs `{f}`"));
                let spec = FiniteSupportSpec::new(
                    self.types.clone(),
                    self.probs.clone(),
                    self.replenishment.clone().ok_or_else(|| missing("replenishment"))?,
                    self.mu_lower.ok_or_else(|| missing("mu_lower"))?,
                    self.stability_radius.ok_or_else(|| missing("stability_radius"))?,
                )?;
                let bounds = self.bounds.ok_or_else(|| missing("bounds"))?;
                InputModel::finite_support("finite-support", spec, bounds)?
            }
        };
        if let Some(b) = self.bounds {
            model = model.with_bounds(b)?;
        }
        if let Some(nd) = self.nondeg {
            model = model.with_nondeg(nd)?;
        }
        if let Some(name) = &self.name {
            model = model.with_name(name.clone());
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
    pub horizons: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub trace: Option<TraceRequest>,
}

/// Whole config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub model: ModelConfig,
    /// Dual-solver options shared by every policy.
    #[serde(default)]
    pub solver: SolverOpts,
    pub policies: Vec<PolicyConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Builds and validates the experiment.
    pub fn to_spec(&self) -> Result<ExperimentSpec, ConfigError> {
        let model = self.model.build()?;
        let algorithms = self
            .policies
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.solver = self.solver;
                p.validate().map(|_| p)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let spec = ExperimentSpec {
            id: self.experiment.id.clone(),
            model,
            algorithms,
            horizons: self.experiment.horizons.clone(),
            trials: self.experiment.trials,
            master_seed: self.experiment.master_seed,
            threads: self.experiment.threads,
            output_dir: self.experiment.output_dir.clone(),
            trace: self.experiment.trace.clone(),
        };
        spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }
}
