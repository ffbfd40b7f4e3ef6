//! Self-guided tomography as complex-parameter simultaneous perturbation.
//!
//! Every iteration draws a direction `Δ_k ∈ {1, −1, i, −i}^d`, projects the
//! unknown state onto `normalize(ψ_k ± β_k Δ_k)`, turns the two counts into
//! `δN = (N₊ − N₋)/(N₊ + N₋)`, and steps the estimate along
//! `g_k = δN·Δ_k/(2β_k)` with gain `α_k`:
//!
//! ```text
//! α_k = a / (k + 1 + A)^s        β_k = b / (k + 1)^t
//! ψ_{k+1} = normalize(ψ_k + α_k g_k)
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::MeasurementOracle;
use crate::qudit::{
    check_dims, haar_random_state, infidelity, perturb_pair, sample_direction,
    PerturbationDirection, QuditState,
};
use crate::seed::rng_from_seed;

/// Power-law gain sequences for the step size (`a`, `A`, `s`) and the
/// perturbation strength (`b`, `t`).
///
/// | field   | default | role                         |
/// |---------|---------|------------------------------|
/// | `a`     | 3.0     | step-size scale              |
/// | `big_a` | 9.0     | step-size stability offset   |
/// | `s`     | 1.0     | step-size decay exponent     |
/// | `b`     | 0.1     | perturbation scale           |
/// | `t`     | 0.101   | perturbation decay exponent  |
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainSchedule {
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub s: f64,
    pub b: f64,
    pub t: f64,
}

impl Default for GainSchedule {
    fn default() -> Self {
        Self {
            a: 3.0,
            big_a: 9.0,
            s: 1.0,
            b: 0.1,
            t: 0.101,
        }
    }
}

impl GainSchedule {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("a", self.a), ("s", self.s), ("b", self.b), ("t", self.t)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if !(self.big_a >= 0.0) || !self.big_a.is_finite() {
            return Err(Error::InvalidParameter {
                name: "A",
                value: self.big_a,
            });
        }
        Ok(())
    }

    /// Step size `α_k = a/(k+1+A)^s`.
    pub fn alpha(&self, k: usize) -> f64 {
        gain_alpha(self, k)
    }

    /// Perturbation strength `β_k = b/(k+1)^t`.
    pub fn beta(&self, k: usize) -> f64 {
        gain_beta(self, k)
    }
}

pub fn gain_alpha(schedule: &GainSchedule, k: usize) -> f64 {
    schedule.a / (k as f64 + 1.0 + schedule.big_a).powf(schedule.s)
}

pub fn gain_beta(schedule: &GainSchedule, k: usize) -> f64 {
    schedule.b / (k as f64 + 1.0).powf(schedule.t)
}

/// Configuration of one SGT run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgtConfig {
    pub dim: usize,
    pub iterations: usize,
    #[serde(default)]
    pub schedule: GainSchedule,
    pub seed: u64,
    /// Starting estimate; Haar-random from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_guess: Option<QuditState>,
}

impl SgtConfig {
    pub fn new(dim: usize, iterations: usize, seed: u64) -> Self {
        Self {
            dim,
            iterations,
            schedule: GainSchedule::default(),
            seed,
            initial_guess: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        self.schedule.validate()?;
        if let Some(guess) = &self.initial_guess {
            check_dims(self.dim, guess.dim())?;
        }
        Ok(())
    }
}

/// Everything observed and decided in one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub direction: PerturbationDirection,
    pub beta: f64,
    pub alpha: f64,
    pub counts_plus: u64,
    pub counts_minus: u64,
    pub delta_n: f64,
    /// Both channels read zero, so no step was taken.
    #[serde(default)]
    pub zero_signal: bool,
    /// The update collapsed to a null vector; the previous estimate was kept.
    #[serde(default)]
    pub degenerate_update: bool,
    /// Estimate after this iteration's update, `ψ_{k+1}`.
    pub estimate: QuditState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infidelity_vs_target: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRepr")]
pub struct Trajectory {
    pub config: SgtConfig,
    pub initial_estimate: QuditState,
    pub records: Vec<IterationRecord>,
    pub final_estimate: QuditState,
}

#[derive(Deserialize)]
struct TrajectoryRepr {
    config: SgtConfig,
    initial_estimate: QuditState,
    records: Vec<IterationRecord>,
    final_estimate: QuditState,
}

impl TryFrom<TrajectoryRepr> for Trajectory {
    type Error = Error;

    fn try_from(repr: TrajectoryRepr) -> Result<Self> {
        if repr.records.len() != repr.config.iterations {
            return Err(Error::LengthMismatch(format!(
                "trajectory has {} records for {} iterations",
                repr.records.len(),
                repr.config.iterations
            )));
        }
        if repr.records.last().map(|r| &r.estimate) != Some(&repr.final_estimate) {
            return Err(Error::Parse {
                what: "trajectory",
                detail: "final estimate differs from the last record".into(),
            });
        }
        Ok(Self {
            config: repr.config,
            initial_estimate: repr.initial_estimate,
            records: repr.records,
            final_estimate: repr.final_estimate,
        })
    }
}

impl Trajectory {
    /// Per-iteration infidelity against the reference, when one was given.
    pub fn infidelity_curve(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.infidelity_vs_target).collect()
    }

    pub fn final_infidelity(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.infidelity_vs_target)
    }
}

/// `(N₊ − N₋)/(N₊ + N₋)`, or 0 when both counts are zero.
pub fn pseudo_normalized_difference(n_plus: u64, n_minus: u64) -> f64 {
    let total = n_plus as f64 + n_minus as f64;
    if total == 0.0 {
        0.0
    } else {
        (n_plus as f64 - n_minus as f64) / total
    }
}

/// `(δN/(2β))·Δ`.
pub fn gradient(delta_n: f64, direction: &PerturbationDirection, beta: f64) -> Result<Vec<Complex64>> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidGain(beta));
    }
    let scale = delta_n / (2.0 * beta);
    Ok(direction.entries().iter().map(|u| u.value() * scale).collect())
}

/// `normalize(ψ + α·g)`.
pub fn update_estimate(psi: &QuditState, alpha: f64, g: &[Complex64]) -> Result<QuditState> {
    psi.shifted(alpha, g).map_err(|e| match e {
        Error::DegenerateVector(_) | Error::NonFinite => Error::DegenerateUpdate,
        other => other,
    })
}

/// Outcome of one estimate update from recorded data.
struct Step {
    delta_n: f64,
    estimate: QuditState,
    degenerate: bool,
}

fn step(
    psi: &QuditState,
    direction: &PerturbationDirection,
    beta: f64,
    alpha: f64,
    counts: (u64, u64),
) -> Result<Step> {
    let delta_n = pseudo_normalized_difference(counts.0, counts.1);
    let g = gradient(delta_n, direction, beta)?;
    match update_estimate(psi, alpha, &g) {
        Ok(estimate) => Ok(Step {
            delta_n,
            estimate,
            degenerate: false,
        }),
        Err(Error::DegenerateUpdate) => Ok(Step {
            delta_n,
            estimate: psi.clone(),
            degenerate: true,
        }),
        Err(e) => Err(e),
    }
}

/// Runs `config.iterations` SGT iterations against `oracle`.
///
/// When `reference` is given, every record carries the infidelity of the new
/// estimate to it. The run is a pure function of `config` and the oracle.
pub fn run_sgt<O: MeasurementOracle + ?Sized>(
    config: &SgtConfig,
    oracle: &mut O,
    reference: Option<&QuditState>,
) -> Result<Trajectory> {
    config.validate()?;
    check_dims(config.dim, oracle.dim())?;
    if let Some(reference) = reference {
        check_dims(config.dim, reference.dim())?;
    }
    let mut rng = rng_from_seed(config.seed);
    let initial = match &config.initial_guess {
        Some(guess) => guess.clone(),
        None => haar_random_state(config.dim, &mut rng)?,
    };
    let schedule = &config.schedule;
    let mut psi = initial.clone();
    let mut records = Vec::with_capacity(config.iterations);
    for k in 0..config.iterations {
        let beta = schedule.beta(k);
        let alpha = schedule.alpha(k);
        let direction = sample_direction(config.dim, &mut rng)?;
        let (plus, minus) = perturb_pair(&psi, &direction, beta)?;
        let counts = oracle
            .measure(&plus, &minus)
            .map_err(|e| Error::Oracle {
                iteration: k,
                source: Box::new(e),
            })?;
        let Step {
            delta_n,
            estimate,
            degenerate,
        } = step(&psi, &direction, beta, alpha, counts)?;
        let infidelity_vs_target = reference.map(|r| infidelity(&estimate, r)).transpose()?;
        records.push(IterationRecord {
            k,
            direction,
            beta,
            alpha,
            counts_plus: counts.0,
            counts_minus: counts.1,
            delta_n,
            zero_signal: counts.0 == 0 && counts.1 == 0,
            degenerate_update: degenerate,
            estimate: estimate.clone(),
            infidelity_vs_target,
        });
        psi = estimate;
    }
    Ok(Trajectory {
        config: config.clone(),
        initial_estimate: initial,
        records,
        final_estimate: psi,
    })
}

/// Recomputes the estimate sequence from the stored counts, directions and
/// gains alone.
pub fn replay_records(initial: &QuditState, records: &[IterationRecord]) -> Result<Vec<QuditState>> {
    let mut psi = initial.clone();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        check_dims(psi.dim(), r.direction.dim())?;
        let next = step(
            &psi,
            &r.direction,
            r.beta,
            r.alpha,
            (r.counts_plus, r.counts_minus),
        )?;
        psi = next.estimate;
        out.push(psi.clone());
    }
    Ok(out)
}
