//! Simulated two-channel projective measurement.
//!
//! Each channel clicks with probability `|⟨σ|ψ⟩|²` (after cross-talk), scaled
//! to `max_counts` at perfect overlap. Counts carry Poisson shot noise plus a
//! Gaussian electronic read-out background, from which a constant offset is
//! subtracted before the result is floored at zero.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qudit::{check_dims, haar_random_state, inner_unchecked, QuditState};
use crate::seed::{rng_from_seed, SimRng};

pub const DEFAULT_CROSSTALK: f64 = 0.01;
pub const DEFAULT_ELECTRONIC_MEAN: f64 = 890.0;
pub const DEFAULT_ELECTRONIC_STD: f64 = 14.0;
pub const DEFAULT_SUBTRACTION_OFFSET: f64 = 820.0;

/// Largest preparation infidelity a sample is clipped to.
const MAX_PREPARATION_INFIDELITY: f64 = 1.0 - f64::EPSILON;

/// Count statistics of one measurement channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Expected counts at unit overlap, `N`.
    pub max_counts: u64,
    /// Click probability for an input orthogonal to the projector.
    pub crosstalk: f64,
    pub electronic_mean: f64,
    pub electronic_std: f64,
    pub subtraction_offset: f64,
    /// Poisson sampling; when off, counts are `round(N·p)`.
    pub shot_noise: bool,
    pub electronic_noise: bool,
    pub crosstalk_enabled: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            max_counts: 10_000,
            crosstalk: DEFAULT_CROSSTALK,
            electronic_mean: DEFAULT_ELECTRONIC_MEAN,
            electronic_std: DEFAULT_ELECTRONIC_STD,
            subtraction_offset: DEFAULT_SUBTRACTION_OFFSET,
            shot_noise: true,
            electronic_noise: true,
            crosstalk_enabled: true,
        }
    }
}

impl NoiseModel {
    pub fn with_max_counts(max_counts: u64) -> Self {
        Self {
            max_counts,
            ..Self::default()
        }
    }

    /// Deterministic counts `round(N·p)`: no shot noise, background or
    /// cross-talk.
    pub fn exact(max_counts: u64) -> Self {
        Self {
            max_counts,
            shot_noise: false,
            electronic_noise: false,
            crosstalk_enabled: false,
            ..Self::default()
        }
    }

    /// Poisson counts only.
    pub fn shot_noise_only(max_counts: u64) -> Self {
        Self {
            shot_noise: true,
            ..Self::exact(max_counts)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_counts == 0 {
            return Err(Error::InvalidConfig("max_counts must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.crosstalk) {
            return Err(Error::InvalidParameter {
                name: "crosstalk",
                value: self.crosstalk,
            });
        }
        for (name, value) in [
            ("electronic_mean", self.electronic_mean),
            ("electronic_std", self.electronic_std),
            ("subtraction_offset", self.subtraction_offset),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if self.subtraction_offset > self.electronic_mean {
            return Err(Error::InvalidConfig(format!(
                "subtraction_offset {} exceeds electronic_mean {}",
                self.subtraction_offset, self.electronic_mean
            )));
        }
        Ok(())
    }

    /// Cross-talk level actually applied.
    pub fn effective_crosstalk(&self) -> f64 {
        if self.crosstalk_enabled {
            self.crosstalk
        } else {
            0.0
        }
    }

    /// Mean background left after subtraction (70 counts by default).
    pub fn residual_background(&self) -> f64 {
        if self.electronic_noise {
            self.electronic_mean - self.subtraction_offset
        } else {
            0.0
        }
    }

    /// Scales the environmental background: both the residual mean and the
    /// spread are multiplied by `factor`, the subtraction offset is kept.
    pub fn with_environment_scale(&self, factor: f64) -> Self {
        let residual = self.electronic_mean - self.subtraction_offset;
        Self {
            electronic_mean: self.subtraction_offset + factor * residual,
            electronic_std: factor * self.electronic_std,
            ..self.clone()
        }
    }

    pub fn with_crosstalk_scale(&self, factor: f64) -> Self {
        Self {
            crosstalk: self.crosstalk * factor,
            ..self.clone()
        }
    }
}

/// Per-state preparation error: the prepared state has fidelity `1 − ε` to
/// the intended one, with `ε ~ Gaussian(mean, std)` clipped to `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationModel {
    pub mean_infidelity: f64,
    #[serde(default = "default_infidelity_std")]
    pub infidelity_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_infidelity_std() -> f64 {
    0.001
}

impl PreparationModel {
    /// Calibrated preparation error for dimension `dim`: 0.6 % for `d = 3`,
    /// 0.9 % for `d = 5`, linear in `d` elsewhere.
    pub fn default_for_dim(dim: usize) -> Self {
        let mean = (0.0015 * dim as f64 + 0.0015).clamp(0.0, 0.5);
        Self {
            mean_infidelity: mean,
            infidelity_std: default_infidelity_std(),
            seed: 0,
        }
    }

    pub fn perfect() -> Self {
        Self {
            mean_infidelity: 0.0,
            infidelity_std: 0.0,
            seed: 0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean_infidelity: self.mean_infidelity * factor,
            infidelity_std: self.infidelity_std * factor,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.mean_infidelity) {
            return Err(Error::InvalidParameter {
                name: "mean_infidelity",
                value: self.mean_infidelity,
            });
        }
        if !(self.infidelity_std >= 0.0) || !self.infidelity_std.is_finite() {
            return Err(Error::InvalidParameter {
                name: "infidelity_std",
                value: self.infidelity_std,
            });
        }
        Ok(())
    }

    /// Draws `ε` from `rng`, clipped to `[0, 1)`.
    pub fn sample_infidelity<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (self.mean_infidelity + self.infidelity_std * z).clamp(0.0, MAX_PREPARATION_INFIDELITY)
    }

    /// [`prepare_imperfect_state`] driven by this model's own seed.
    pub fn prepare(&self, target: &QuditState) -> Result<QuditState> {
        let mut rng = rng_from_seed(self.seed);
        prepare_imperfect_state(target, self, &mut rng)
    }
}

/// Single-channel or two-channel projective measurement device.
pub trait MeasurementOracle {
    fn dim(&self) -> usize;

    /// Counts `(N₊, N₋)` for projections onto `plus` and `minus`.
    fn measure(&mut self, plus: &QuditState, minus: &QuditState) -> Result<(u64, u64)>;
}

/// `|⟨σ|ψ⟩|²`.
pub fn projection_probability(sigma: &QuditState, psi: &QuditState) -> Result<f64> {
    check_dims(sigma.dim(), psi.dim())?;
    Ok(inner_unchecked(sigma.amplitudes(), psi.amplitudes())
        .norm_sqr()
        .clamp(0.0, 1.0))
}

/// `(1 − c)·p + c`.
pub fn apply_crosstalk(p: f64, c: f64) -> f64 {
    ((1.0 - c) * p + c).clamp(0.0, 1.0)
}

/// One channel reading for click probability `p`.
pub fn sample_channel_counts<R: Rng + ?Sized>(p: f64, noise: &NoiseModel, rng: &mut R) -> u64 {
    let mean = noise.max_counts as f64 * p.clamp(0.0, 1.0);
    let signal = if !noise.shot_noise {
        mean.round()
    } else if mean > 0.0 {
        // λ > 0 and finite, so construction cannot fail.
        Poisson::new(mean).expect("valid Poisson mean").sample(rng)
    } else {
        0.0
    };
    if !noise.electronic_noise {
        return signal as u64;
    }
    let z: f64 = rng.sample(StandardNormal);
    let background = (noise.electronic_mean + noise.electronic_std * z).round();
    (signal + background - noise.subtraction_offset).round().max(0.0) as u64
}

/// Prepared state `√(1−ε)·target + √ε·χ` with `χ` Haar-random in the
/// orthogonal complement of `target`; `ε` is drawn from `prep`.
pub fn prepare_imperfect_state<R: Rng + ?Sized>(
    target: &QuditState,
    prep: &PreparationModel,
    rng: &mut R,
) -> Result<QuditState> {
    let eps = prep.sample_infidelity(rng);
    prepare_with_infidelity(target, eps, rng)
}

/// Same construction as [`prepare_imperfect_state`] with a fixed `ε`.
pub fn prepare_with_infidelity<R: Rng + ?Sized>(
    target: &QuditState,
    eps: f64,
    rng: &mut R,
) -> Result<QuditState> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter {
            name: "preparation infidelity",
            value: eps,
        });
    }
    let dim = target.dim();
    if dim == 1 || eps == 0.0 {
        return Ok(target.clone());
    }
    let chi = loop {
        let candidate = haar_random_state(dim, rng)?;
        let overlap = inner_unchecked(target.amplitudes(), candidate.amplitudes());
        let projected: Vec<Complex64> = candidate
            .amplitudes()
            .iter()
            .zip(target.amplitudes())
            .map(|(c, t)| c - t * overlap)
            .collect();
        if let Ok(chi) = QuditState::new(projected) {
            break chi;
        }
    };
    let keep = (1.0 - eps).sqrt();
    let mix = eps.sqrt();
    QuditState::new(
        target
            .amplitudes()
            .iter()
            .zip(chi.amplitudes())
            .map(|(t, x)| t * keep + x * mix)
            .collect(),
    )
}

/// Two independent channel readings of `prepared` against `σ₊` and `σ₋`.
pub fn mqpg_measure<R: Rng + ?Sized>(
    sigma_plus: &QuditState,
    sigma_minus: &QuditState,
    prepared: &QuditState,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<(u64, u64)> {
    let c = noise.effective_crosstalk();
    let p_plus = apply_crosstalk(projection_probability(sigma_plus, prepared)?, c);
    let p_minus = apply_crosstalk(projection_probability(sigma_minus, prepared)?, c);
    let n_plus = sample_channel_counts(p_plus, noise, rng);
    let n_minus = sample_channel_counts(p_minus, noise, rng);
    Ok((n_plus, n_minus))
}

/// Simulated two-output pulse gate measuring a fixed prepared state.
#[derive(Clone, Debug)]
pub struct SimulatedMqpg {
    prepared: QuditState,
    noise: NoiseModel,
    rng: SimRng,
}

impl SimulatedMqpg {
    pub fn new(prepared: QuditState, noise: NoiseModel, seed: u64) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            prepared,
            noise,
            rng: rng_from_seed(seed),
        })
    }

    pub fn prepared(&self) -> &QuditState {
        &self.prepared
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}

impl MeasurementOracle for SimulatedMqpg {
    fn dim(&self) -> usize {
        self.prepared.dim()
    }

    fn measure(&mut self, plus: &QuditState, minus: &QuditState) -> Result<(u64, u64)> {
        mqpg_measure(plus, minus, &self.prepared, &self.noise, &mut self.rng)
    }
}

/// Noise-free device returning `round(N·p)` for each channel.
#[derive(Clone, Debug)]
pub struct ExactOracle {
    state: QuditState,
    max_counts: u64,
}

impl ExactOracle {
    pub fn new(state: QuditState, max_counts: u64) -> Self {
        Self { state, max_counts }
    }
}

impl MeasurementOracle for ExactOracle {
    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn measure(&mut self, plus: &QuditState, minus: &QuditState) -> Result<(u64, u64)> {
        let n = self.max_counts as f64;
        let p_plus = projection_probability(plus, &self.state)?;
        let p_minus = projection_probability(minus, &self.state)?;
        Ok(((n * p_plus).round() as u64, (n * p_minus).round() as u64))
    }
}
