use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sgt_core::experiments::{default_iterations, ErrorScales, ExperimentPlan, PreparationPlan, RunSpec};
use sgt_core::measurement::NoiseModel;
use sgt_core::mle::MleOptions;
use sgt_core::sgt::GainSchedule;

/// Contents of a TOML config file. Every section and field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Base seed for every random stream.
    pub seed: Option<u64>,
    pub run: RunSection,
    pub plan: PlanSection,
    pub schedule: GainSchedule,
    pub noise: NoiseModel,
    pub preparation: PreparationPlan,
    pub scales: ErrorScales,
    pub mle: MleOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub dim: usize,
    pub iterations: Option<usize>,
    /// Overrides `noise.max_counts`.
    pub max_counts: Option<u64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            dim: 3,
            iterations: None,
            max_counts: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub dims: Vec<usize>,
    pub count_levels: Vec<u64>,
    pub population: usize,
    pub iterations: Vec<usize>,
    pub budget_dims: Vec<usize>,
    pub budget_count_levels: Vec<u64>,
    pub workers: Option<usize>,
}

impl Default for PlanSection {
    fn default() -> Self {
        let plan = ExperimentPlan::default();
        Self {
            dims: plan.dims,
            count_levels: plan.count_levels,
            population: plan.population,
            iterations: plan.iterations,
            budget_dims: plan.budget_dims,
            budget_count_levels: plan.budget_count_levels,
            workers: plan.workers,
        }
    }
}

pub const DEFAULT_SEED: u64 = 2024;

/// A parsed config with the raw bytes it came from.
pub struct LoadedConfig {
    pub path: PathBuf,
    pub config: Config,
    pub bytes: Vec<u8>,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let text = std::str::from_utf8(&bytes)
            .with_context(|| format!("config file {} is not valid UTF-8", path.display()))?;
        let config = parse(text).with_context(|| format!("invalid config file {}", path.display()))?;
        Ok(Self {
            path: path.to_path_buf(),
            config,
            bytes,
        })
    }
}

pub fn parse(text: &str) -> Result<Config> {
    Ok(toml::from_str(text)?)
}

impl Config {
    pub fn seed(&self, override_seed: Option<u64>) -> u64 {
        override_seed.or(self.seed).unwrap_or(DEFAULT_SEED)
    }

    pub fn plan(&self, seed: u64) -> ExperimentPlan {
        ExperimentPlan {
            dims: self.plan.dims.clone(),
            count_levels: self.plan.count_levels.clone(),
            population: self.plan.population,
            iterations: self.plan.iterations.clone(),
            base_seed: seed,
            schedule: self.schedule,
            noise: self.noise.clone(),
            preparation: self.preparation,
            scales: self.scales,
            budget_dims: self.plan.budget_dims.clone(),
            budget_count_levels: self.plan.budget_count_levels.clone(),
            mle: self.mle,
            workers: self.plan.workers,
        }
    }

    /// The single run described by the `[run]` section.
    pub fn run_spec(&self, seed: u64) -> RunSpec {
        let dim = self.run.dim;
        let noise = NoiseModel {
            max_counts: self.run.max_counts.unwrap_or(self.noise.max_counts),
            ..self.noise.clone()
        }
        .with_environment_scale(self.scales.environment)
        .with_crosstalk_scale(self.scales.crosstalk);
        let mut spec = RunSpec::single(
            dim,
            self.run.iterations.unwrap_or_else(|| default_iterations(dim)),
            seed,
            self.schedule,
            noise,
            self.preparation,
        );
        spec.preparation = spec.preparation.scaled(self.scales.preparation);
        spec
    }
}
