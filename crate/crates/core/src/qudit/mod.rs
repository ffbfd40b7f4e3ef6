//! Pure qudit states over the first `d` Hermite-Gaussian modes.
//!
//! A [`QuditState`] is always unit norm: every constructor and every
//! arithmetic operation renormalizes. Global phase is left alone, so compare
//! states through [`fidelity`], never through raw amplitudes.

mod spectral;

pub use spectral::{hermite_gaussian, render_spectral_amplitude};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vectors shorter than this are treated as degenerate and never normalized.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Amplitudes must satisfy `|Σ|c_j|² − 1| <= NORM_TOLERANCE` to be accepted
/// verbatim.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Unit-norm vector of complex mode amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct QuditState {
    amplitudes: Vec<Complex64>,
}

impl QuditState {
    /// Normalizes `amplitudes` into a state.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = l2_norm(&amplitudes);
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateVector(norm));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|c| c / norm).collect(),
        })
    }

    /// Accepts amplitudes that are already normalized, without rescaling.
    ///
    /// Used when reading stored states back so that they round-trip bit for
    /// bit.
    pub fn from_normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm_sqr.sqrt()));
        }
        Ok(Self { amplitudes })
    }

    /// Basis state `|α_index⟩` (zero-based).
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`, conjugating `self`.
    pub fn inner(&self, other: &QuditState) -> Result<Complex64> {
        check_dims(self.dim(), other.dim())?;
        Ok(inner_unchecked(&self.amplitudes, &other.amplitudes))
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            amplitudes: self.amplitudes.iter().map(|c| c * phase).collect(),
        }
    }

    /// `normalize(self + scale·v)`.
    pub fn shifted(&self, scale: f64, v: &[Complex64]) -> Result<Self> {
        check_dims(self.dim(), v.len())?;
        let raw: Vec<Complex64> = self
            .amplitudes
            .iter()
            .zip(v)
            .map(|(c, x)| c + x * scale)
            .collect();
        let norm = l2_norm(&raw);
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateVector(norm));
        }
        Ok(Self {
            amplitudes: raw.into_iter().map(|c| c / norm).collect(),
        })
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }
}

impl TryFrom<Vec<Complex64>> for QuditState {
    type Error = Error;

    fn try_from(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_normalized(amplitudes)
    }
}

impl From<QuditState> for Vec<Complex64> {
    fn from(state: QuditState) -> Self {
        state.amplitudes
    }
}

/// The four allowed perturbation values `{1, −1, i, −i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "1")]
    PlusOne,
    #[serde(rename = "-1")]
    MinusOne,
    #[serde(rename = "i")]
    PlusI,
    #[serde(rename = "-i")]
    MinusI,
}

impl Unit {
    pub const ALL: [Unit; 4] = [Unit::PlusOne, Unit::MinusOne, Unit::PlusI, Unit::MinusI];

    pub fn value(self) -> Complex64 {
        match self {
            Unit::PlusOne => Complex64::new(1.0, 0.0),
            Unit::MinusOne => Complex64::new(-1.0, 0.0),
            Unit::PlusI => Complex64::new(0.0, 1.0),
            Unit::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    pub fn negated(self) -> Unit {
        match self {
            Unit::PlusOne => Unit::MinusOne,
            Unit::MinusOne => Unit::PlusOne,
            Unit::PlusI => Unit::MinusI,
            Unit::MinusI => Unit::PlusI,
        }
    }
}

/// Random perturbation direction Δ with entries in `{1, −1, i, −i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerturbationDirection {
    entries: Vec<Unit>,
}

impl PerturbationDirection {
    pub fn new(entries: Vec<Unit>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Unit] {
        &self.entries
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.entries.iter().map(|u| u.value()).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|u| u.negated()).collect(),
        }
    }
}

/// Haar-random pure state: `d` i.i.d. standard complex Gaussians, normalized.
pub fn haar_random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<QuditState> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    loop {
        let amplitudes: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        // A zero draw has probability zero; redraw rather than fail.
        if l2_norm(&amplitudes) >= DEGENERATE_NORM {
            return QuditState::new(amplitudes);
        }
    }
}

/// Each entry independently uniform over `{1, −1, i, −i}`.
pub fn sample_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PerturbationDirection> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let entries = (0..dim)
        .map(|_| Unit::ALL[rng.random_range(0..4)])
        .collect();
    PerturbationDirection::new(entries)
}

/// `|⟨ψ|φ⟩|²`.
pub fn fidelity(psi: &QuditState, phi: &QuditState) -> Result<f64> {
    let overlap = psi.inner(phi)?.norm_sqr();
    Ok(overlap.clamp(0.0, 1.0))
}

/// `1 − |⟨ψ|φ⟩|²`.
pub fn infidelity(psi: &QuditState, phi: &QuditState) -> Result<f64> {
    Ok(1.0 - fidelity(psi, phi)?)
}

/// `(normalize(ψ + βΔ), normalize(ψ − βΔ))`.
pub fn perturb_pair(
    psi: &QuditState,
    delta: &PerturbationDirection,
    beta: f64,
) -> Result<(QuditState, QuditState)> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidGain(beta));
    }
    check_dims(psi.dim(), delta.dim())?;
    let direction = delta.to_complex();
    let plus = psi
        .shifted(beta, &direction)
        .map_err(|_| Error::DegeneratePerturbation { beta })?;
    let minus = psi
        .shifted(-beta, &direction)
        .map_err(|_| Error::DegeneratePerturbation { beta })?;
    Ok((plus, minus))
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn inner_unchecked(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
