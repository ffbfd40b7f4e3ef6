//! Population experiments: convergence curves per count level, error-budget
//! sweeps and the SGT versus maximum-likelihood comparison.
//!
//! Seeds are derived from the plan's base seed so that target state `i` of
//! dimension `d` is the same in every condition, and any single run can be
//! regenerated from its [`RunSpec`] alone.

mod stats;

pub use stats::{percentile, summarize, QuartileSummary, SummaryStats};

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{NoiseModel, PreparationModel, SimulatedMqpg};
use crate::mle::{acquire_tomogram, build_projector_set, fidelity_to_pure, mle_reconstruct, MleOptions};
use crate::qudit::{fidelity, haar_random_state, QuditState};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::sgt::{run_sgt, GainSchedule, SgtConfig, Trajectory};

/// Default iteration budget: 200 for `d = 3`, 300 for `d = 5`.
pub fn default_iterations(dim: usize) -> usize {
    50 * dim + 50
}

/// Multipliers applied to each error source relative to the plan's model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorScales {
    pub environment: f64,
    pub crosstalk: f64,
    pub preparation: f64,
}

impl Default for ErrorScales {
    fn default() -> Self {
        Self {
            environment: 1.0,
            crosstalk: 1.0,
            preparation: 1.0,
        }
    }
}

impl ErrorScales {
    fn combine(self, other: ErrorScales) -> Self {
        Self {
            environment: self.environment * other.environment,
            crosstalk: self.crosstalk * other.crosstalk,
            preparation: self.preparation * other.preparation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("environment scale", self.environment),
            ("crosstalk scale", self.crosstalk),
            ("preparation scale", self.preparation),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Preparation error of a plan; the mean defaults per dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreparationPlan {
    pub mean_infidelity: Option<f64>,
    pub infidelity_std: f64,
}

impl Default for PreparationPlan {
    fn default() -> Self {
        Self {
            mean_infidelity: None,
            infidelity_std: PreparationModel::default_for_dim(3).infidelity_std,
        }
    }
}

impl PreparationPlan {
    pub fn perfect() -> Self {
        Self {
            mean_infidelity: Some(0.0),
            infidelity_std: 0.0,
        }
    }

    pub fn model(&self, dim: usize, seed: u64) -> PreparationModel {
        let base = PreparationModel::default_for_dim(dim);
        PreparationModel {
            mean_infidelity: self.mean_infidelity.unwrap_or(base.mean_infidelity),
            infidelity_std: self.infidelity_std,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub dims: Vec<usize>,
    pub count_levels: Vec<u64>,
    pub population: usize,
    /// Iterations per entry of `dims`; empty means [`default_iterations`].
    pub iterations: Vec<usize>,
    pub base_seed: u64,
    pub schedule: GainSchedule,
    /// Channel model; `max_counts` is replaced by each count level.
    pub noise: NoiseModel,
    pub preparation: PreparationPlan,
    /// Scales applied to every condition of the batch.
    pub scales: ErrorScales,
    pub budget_dims: Vec<usize>,
    pub budget_count_levels: Vec<u64>,
    pub mle: MleOptions,
    /// Parallel workers; `None` uses every core.
    pub workers: Option<usize>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            dims: vec![3, 5],
            count_levels: vec![100, 1_000, 10_000, 100_000],
            population: 100,
            iterations: Vec::new(),
            base_seed: 2024,
            schedule: GainSchedule::default(),
            noise: NoiseModel::default(),
            preparation: PreparationPlan::default(),
            scales: ErrorScales::default(),
            budget_dims: vec![5],
            budget_count_levels: vec![1_000, 10_000],
            mle: MleOptions::default(),
            workers: None,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::InvalidConfig("plan has no dimensions".into()));
        }
        if let Some(&d) = self.dims.iter().chain(&self.budget_dims).find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(d));
        }
        if self.count_levels.is_empty() {
            return Err(Error::InvalidConfig("plan has no count levels".into()));
        }
        if self.count_levels.iter().chain(&self.budget_count_levels).any(|&n| n == 0) {
            return Err(Error::InvalidConfig("count levels must be positive".into()));
        }
        if self.population == 0 {
            return Err(Error::InvalidConfig("population must be positive".into()));
        }
        if !self.iterations.is_empty() && self.iterations.len() != self.dims.len() {
            return Err(Error::InvalidConfig(format!(
                "{} iteration counts for {} dimensions",
                self.iterations.len(),
                self.dims.len()
            )));
        }
        if self.iterations.contains(&0) {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        self.schedule.validate()?;
        self.noise.validate()?;
        self.scales.validate()?;
        self.preparation.model(3, 0).validate()?;
        Ok(())
    }

    pub fn iterations_for(&self, dim: usize) -> usize {
        self.dims
            .iter()
            .position(|&d| d == dim)
            .and_then(|i| self.iterations.get(i).copied())
            .unwrap_or_else(|| default_iterations(dim))
    }

    /// Fully resolved run for state `index` under `condition`.
    pub fn run_spec(&self, condition: &Condition, index: usize) -> RunSpec {
        let d = condition.dim as u64;
        let n = condition.max_counts;
        let i = index as u64;
        let scales = self.scales.combine(condition.scales);
        let noise = NoiseModel {
            max_counts: n,
            ..self.noise.clone()
        }
        .with_environment_scale(scales.environment)
        .with_crosstalk_scale(scales.crosstalk);
        let preparation = self
            .preparation
            .model(condition.dim, derive_seed(self.base_seed, &[stream::PREPARATION, d, i]))
            .scaled(scales.preparation);
        RunSpec {
            dim: condition.dim,
            iterations: self.iterations_for(condition.dim),
            schedule: self.schedule,
            noise,
            preparation,
            target_seed: derive_seed(self.base_seed, &[stream::TARGET, d, i]),
            engine_seed: derive_seed(self.base_seed, &[stream::ENGINE, d, n, i]),
            oracle_seed: derive_seed(self.base_seed, &[stream::ORACLE, d, n, i]),
            tomogram_seed: derive_seed(self.base_seed, &[stream::TOMOGRAM, d, n, i]),
        }
    }

    /// Every `(d, N)` pair of the plan, in plan order.
    pub fn conditions(&self) -> Vec<Condition> {
        grid(&self.dims, &self.count_levels, ErrorScales::default())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(workers) = self.workers {
            builder = builder.num_threads(workers);
        }
        builder
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
    }
}

fn grid(dims: &[usize], levels: &[u64], scales: ErrorScales) -> Vec<Condition> {
    dims.iter()
        .flat_map(|&dim| {
            levels.iter().map(move |&max_counts| Condition {
                dim,
                max_counts,
                scales,
            })
        })
        .collect()
}

/// One cell of a batch: dimension, count level and error scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub dim: usize,
    pub max_counts: u64,
    #[serde(default)]
    pub scales: ErrorScales,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}_N{}", self.dim, self.max_counts)
    }
}

/// Everything needed to regenerate one SGT run bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub dim: usize,
    pub iterations: usize,
    pub schedule: GainSchedule,
    pub noise: NoiseModel,
    pub preparation: PreparationModel,
    pub target_seed: u64,
    pub engine_seed: u64,
    pub oracle_seed: u64,
    pub tomogram_seed: u64,
}

impl RunSpec {
    /// A stand-alone run whose seeds all derive from `seed`.
    pub fn single(
        dim: usize,
        iterations: usize,
        seed: u64,
        schedule: GainSchedule,
        noise: NoiseModel,
        preparation: PreparationPlan,
    ) -> Self {
        Self {
            dim,
            iterations,
            schedule,
            noise,
            preparation: preparation.model(dim, derive_seed(seed, &[stream::PREPARATION])),
            target_seed: derive_seed(seed, &[stream::TARGET]),
            engine_seed: derive_seed(seed, &[stream::ENGINE]),
            oracle_seed: derive_seed(seed, &[stream::ORACLE]),
            tomogram_seed: derive_seed(seed, &[stream::TOMOGRAM]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sgt_config().validate()?;
        self.noise.validate()?;
        self.preparation.validate()
    }

    pub fn sgt_config(&self) -> SgtConfig {
        SgtConfig {
            dim: self.dim,
            iterations: self.iterations,
            schedule: self.schedule,
            seed: self.engine_seed,
            initial_guess: None,
        }
    }

    /// The ideal Haar-random target.
    pub fn target(&self) -> Result<QuditState> {
        haar_random_state(self.dim, &mut rng_from_seed(self.target_seed))
    }

    /// The target as actually prepared, with preparation error applied.
    pub fn prepared(&self, target: &QuditState) -> Result<QuditState> {
        self.preparation.prepare(target)
    }

    pub fn execute(&self) -> Result<RunOutcome> {
        self.validate()?;
        let target = self.target()?;
        let prepared = self.prepared(&target)?;
        let mut oracle = SimulatedMqpg::new(prepared.clone(), self.noise.clone(), self.oracle_seed)?;
        let trajectory = run_sgt(&self.sgt_config(), &mut oracle, Some(&target))?;
        let final_fidelity = fidelity(&trajectory.final_estimate, &target)?;
        let prepared_fidelity = fidelity(&trajectory.final_estimate, &prepared)?;
        Ok(RunOutcome {
            spec: self.clone(),
            target,
            prepared,
            trajectory,
            final_fidelity,
            prepared_fidelity,
        })
    }

    /// Maximum-likelihood fidelity to the ideal target from one tomogram of
    /// the same prepared state under the same noise.
    pub fn execute_mle(&self, options: MleOptions) -> Result<f64> {
        self.validate()?;
        let target = self.target()?;
        let prepared = self.prepared(&target)?;
        let set = build_projector_set(self.dim)?;
        let counts = acquire_tomogram(&set, &prepared, &self.noise, &mut rng_from_seed(self.tomogram_seed))?;
        let outcome = mle_reconstruct(&set, &counts, options)?;
        fidelity_to_pure(&outcome.rho, &target)
    }
}

/// A finished SGT run with the states it was measured against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub target: QuditState,
    pub prepared: QuditState,
    pub trajectory: Trajectory,
    /// Final estimate against the ideal target.
    pub final_fidelity: f64,
    /// Final estimate against the prepared state, for diagnostics.
    pub prepared_fidelity: f64,
}

impl RunOutcome {
    pub fn infidelity_curve(&self) -> Vec<f64> {
        self.trajectory
            .infidelity_curve()
            .expect("batch runs always record infidelity to the target")
    }

    /// Regenerates the run from its spec and checks it is bit-identical.
    pub fn replays_exactly(&self) -> Result<bool> {
        Ok(self.spec.execute()? == *self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub condition: Condition,
    pub state_index: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ConditionRuns {
    pub condition: Condition,
    pub outcomes: Vec<RunOutcome>,
    pub failures: Vec<RunFailure>,
}

impl ConditionRuns {
    pub fn summary(&self) -> Result<SummaryStats> {
        let curves: Vec<Vec<f64>> = self.outcomes.iter().map(RunOutcome::infidelity_curve).collect();
        summarize(&curves)
    }
}

#[derive(Clone, Debug)]
pub struct BatchResult {
    pub conditions: Vec<ConditionRuns>,
}

impl BatchResult {
    pub fn failures(&self) -> impl Iterator<Item = &RunFailure> {
        self.conditions.iter().flat_map(|c| &c.failures)
    }

    pub fn trajectory_count(&self) -> usize {
        self.conditions.iter().map(|c| c.outcomes.len()).sum()
    }

    pub fn get(&self, dim: usize, max_counts: u64) -> Option<&ConditionRuns> {
        self.conditions
            .iter()
            .find(|c| c.condition.dim == dim && c.condition.max_counts == max_counts)
    }
}

fn run_conditions(plan: &ExperimentPlan, conditions: &[Condition]) -> Result<BatchResult> {
    plan.validate()?;
    let jobs: Vec<(usize, usize)> = (0..conditions.len())
        .flat_map(|c| (0..plan.population).map(move |i| (c, i)))
        .collect();
    let results: Vec<Result<RunOutcome>> = plan.pool()?.install(|| {
        jobs.par_iter()
            .map(|&(c, i)| plan.run_spec(&conditions[c], i).execute())
            .collect()
    });
    let mut grouped: Vec<ConditionRuns> = conditions
        .iter()
        .map(|&condition| ConditionRuns {
            condition,
            outcomes: Vec::with_capacity(plan.population),
            failures: Vec::new(),
        })
        .collect();
    for (&(c, i), result) in jobs.iter().zip(results) {
        match result {
            Ok(outcome) => grouped[c].outcomes.push(outcome),
            Err(e) => grouped[c].failures.push(RunFailure {
                condition: conditions[c],
                state_index: i,
                message: e.to_string(),
            }),
        }
    }
    Ok(BatchResult { conditions: grouped })
}

/// Runs the full population for every `(d, N)` of the plan.
pub fn run_batch(plan: &ExperimentPlan) -> Result<BatchResult> {
    run_conditions(plan, &plan.conditions())
}

/// Error-budget variations: each source removed or amplified in turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetToggle {
    Baseline,
    NoEnvironment,
    NoCrosstalk,
    NoPreparation,
    Environment10x,
    Crosstalk10x,
    Preparation3x,
}

impl BudgetToggle {
    pub const ALL: [BudgetToggle; 7] = [
        BudgetToggle::Baseline,
        BudgetToggle::NoEnvironment,
        BudgetToggle::NoCrosstalk,
        BudgetToggle::NoPreparation,
        BudgetToggle::Environment10x,
        BudgetToggle::Crosstalk10x,
        BudgetToggle::Preparation3x,
    ];

    pub fn scales(self) -> ErrorScales {
        let unit = ErrorScales::default();
        match self {
            BudgetToggle::Baseline => unit,
            BudgetToggle::NoEnvironment => ErrorScales { environment: 0.0, ..unit },
            BudgetToggle::NoCrosstalk => ErrorScales { crosstalk: 0.0, ..unit },
            BudgetToggle::NoPreparation => ErrorScales { preparation: 0.0, ..unit },
            BudgetToggle::Environment10x => ErrorScales { environment: 10.0, ..unit },
            BudgetToggle::Crosstalk10x => ErrorScales { crosstalk: 10.0, ..unit },
            BudgetToggle::Preparation3x => ErrorScales { preparation: 3.0, ..unit },
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BudgetToggle::Baseline => "baseline",
            BudgetToggle::NoEnvironment => "no_environment",
            BudgetToggle::NoCrosstalk => "no_crosstalk",
            BudgetToggle::NoPreparation => "no_preparation",
            BudgetToggle::Environment10x => "environment_x10",
            BudgetToggle::Crosstalk10x => "crosstalk_x10",
            BudgetToggle::Preparation3x => "preparation_x3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub toggle: BudgetToggle,
    pub dim: usize,
    pub max_counts: u64,
    pub stats: SummaryStats,
    pub failures: Vec<RunFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub entries: Vec<BudgetEntry>,
}

impl ErrorBudget {
    pub fn get(&self, toggle: BudgetToggle, dim: usize, max_counts: u64) -> Option<&SummaryStats> {
        self.entries
            .iter()
            .find(|e| e.toggle == toggle && e.dim == dim && e.max_counts == max_counts)
            .map(|e| &e.stats)
    }
}

/// Summaries of every [`BudgetToggle`] over the plan's budget dimensions and
/// count levels, on the same population of target states.
pub fn run_error_budget(plan: &ExperimentPlan) -> Result<ErrorBudget> {
    let conditions: Vec<(BudgetToggle, Condition)> = BudgetToggle::ALL
        .iter()
        .flat_map(|&toggle| {
            grid(&plan.budget_dims, &plan.budget_count_levels, toggle.scales())
                .into_iter()
                .map(move |c| (toggle, c))
        })
        .collect();
    let cells: Vec<Condition> = conditions.iter().map(|&(_, c)| c).collect();
    let batch = run_conditions(plan, &cells)?;
    let entries = conditions
        .iter()
        .zip(&batch.conditions)
        .map(|(&(toggle, condition), runs)| {
            Ok(BudgetEntry {
                toggle,
                dim: condition.dim,
                max_counts: condition.max_counts,
                stats: runs.summary()?,
                failures: runs.failures.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorBudget { entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dim: usize,
    pub max_counts: u64,
    pub sgt: QuartileSummary,
    pub mlst: QuartileSummary,
    pub failures: Vec<RunFailure>,
}

/// Final fidelity of SGT and maximum-likelihood tomography per `(d, N)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn get(&self, dim: usize, max_counts: u64) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.dim == dim && r.max_counts == max_counts)
    }

    /// Text table with one line per count level (highest first) and an
    /// SGT/MLST column pair per dimension, values in percent.
    pub fn render(&self) -> String {
        let mut dims: Vec<usize> = self.rows.iter().map(|r| r.dim).collect();
        dims.sort_unstable();
        dims.dedup();
        let mut levels: Vec<u64> = self.rows.iter().map(|r| r.max_counts).collect();
        levels.sort_unstable_by(|a, b| b.cmp(a));
        levels.dedup();

        let cell = |s: &QuartileSummary| {
            format!(
                "{:.2} +{:.2}/-{:.2}",
                100.0 * s.median,
                100.0 * s.upper,
                100.0 * s.lower
            )
        };
        let mut out = format!("{:>8}", "N");
        for d in &dims {
            out.push_str(&format!(" | {:^22} {:^22}", format!("d={d} SGT"), format!("d={d} MLST")));
        }
        out.push('\n');
        for n in levels {
            out.push_str(&format!("{n:>8}"));
            for &d in &dims {
                match self.get(d, n) {
                    Some(row) => out.push_str(&format!(" | {:^22} {:^22}", cell(&row.sgt), cell(&row.mlst))),
                    None => out.push_str(&format!(" | {:^22} {:^22}", "-", "-")),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs SGT and single-channel maximum-likelihood tomography on the same
/// prepared states and noise for every `(d, N)` of the plan.
pub fn compare_sgt_mlst(plan: &ExperimentPlan) -> Result<ComparisonTable> {
    let batch = run_batch(plan)?;
    compare_with_batch(plan, &batch)
}

/// [`compare_sgt_mlst`] reusing the SGT runs of an existing batch.
pub fn compare_with_batch(plan: &ExperimentPlan, batch: &BatchResult) -> Result<ComparisonTable> {
    plan.validate()?;
    let conditions = plan.conditions();
    let jobs: Vec<(usize, usize)> = (0..conditions.len())
        .flat_map(|c| (0..plan.population).map(move |i| (c, i)))
        .collect();
    let mle: Vec<Result<f64>> = plan.pool()?.install(|| {
        jobs.par_iter()
            .map(|&(c, i)| plan.run_spec(&conditions[c], i).execute_mle(plan.mle))
            .collect()
    });
    let mut rows = Vec::with_capacity(conditions.len());
    for (c, condition) in conditions.iter().enumerate() {
        let runs = batch
            .get(condition.dim, condition.max_counts)
            .ok_or_else(|| Error::InvalidConfig(format!("batch is missing condition {condition}")))?;
        let sgt: Vec<f64> = runs.outcomes.iter().map(|o| o.final_fidelity).collect();
        let mut failures = runs.failures.clone();
        let mut mlst = Vec::with_capacity(plan.population);
        for (&(jc, i), result) in jobs.iter().zip(&mle) {
            if jc != c {
                continue;
            }
            match result {
                Ok(f) => mlst.push(*f),
                Err(e) => failures.push(RunFailure {
                    condition: *condition,
                    state_index: i,
                    message: format!("maximum likelihood: {e}"),
                }),
            }
        }
        rows.push(ComparisonRow {
            dim: condition.dim,
            max_counts: condition.max_counts,
            sgt: QuartileSummary::of(&sgt)?,
            mlst: QuartileSummary::of(&mlst)?,
            failures,
        });
    }
    Ok(ComparisonTable { rows })
}
