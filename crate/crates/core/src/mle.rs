//! Single-channel maximum-likelihood state tomography.
//!
//! A tomogram is one count per projector, acquired sequentially on one
//! channel of the same simulated device used for SGT. Reconstruction maximizes
//!
//! ```text
//! L(ρ) = Σ_i n_i · ln( q_i / Σ_j q_j ),   q_i = ⟨π_i|ρ|π_i⟩
//! ```
//!
//! which is the Poisson likelihood with the unknown flux profiled out. The
//! projectors do not sum to the identity, so the classic `RρR` map is used in
//! its diluted form `ρ ← (I + εR) ρ (I + εR) / tr(·)` with
//! `R = Σ_i n_i/(n q_i) π_i − G/Σ_j q_j`, `G = Σ_i π_i`, and `ε` halved until
//! the likelihood does not decrease.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{apply_crosstalk, projection_probability, sample_channel_counts, NoiseModel};
use crate::qudit::{check_dims, QuditState};

pub const DENSITY_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_TOL: f64 = 1e-8;

const MIN_DILUTION: f64 = 1e-12;
const MAX_DILUTION: f64 = 1e3;

type CMatrix = DMatrix<Complex64>;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Measurement states of a single-channel tomogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<QuditState>", into = "Vec<QuditState>")]
pub struct ProjectorSet {
    projectors: Vec<QuditState>,
}

impl ProjectorSet {
    /// Accepts `projectors` if their rank-one operators span the full
    /// `d²`-dimensional operator space.
    pub fn new(projectors: Vec<QuditState>) -> Result<Self> {
        let dim = projectors
            .first()
            .map(QuditState::dim)
            .ok_or(Error::EmptyInput("projector set"))?;
        for p in &projectors {
            check_dims(dim, p.dim())?;
        }
        let rank = operator_rank(&projectors);
        if rank < dim * dim {
            return Err(Error::NotInformationallyComplete {
                rank,
                required: dim * dim,
            });
        }
        Ok(Self { projectors })
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[QuditState] {
        &self.projectors
    }
}

impl TryFrom<Vec<QuditState>> for ProjectorSet {
    type Error = Error;

    fn try_from(projectors: Vec<QuditState>) -> Result<Self> {
        Self::new(projectors)
    }
}

impl From<ProjectorSet> for Vec<QuditState> {
    fn from(set: ProjectorSet) -> Self {
        set.projectors
    }
}

/// Numerical rank of the span of `{|p⟩⟨p|}` as vectors in `C^{d²}`.
pub fn operator_rank(projectors: &[QuditState]) -> usize {
    let Some(dim) = projectors.first().map(QuditState::dim) else {
        return 0;
    };
    let design = CMatrix::from_fn(dim * dim, projectors.len(), |row, col| {
        let a = projectors[col].amplitudes();
        a[row / dim] * a[row % dim].conj()
    });
    let singular = design.singular_values();
    let largest = singular.iter().cloned().fold(0.0, f64::max);
    singular.iter().filter(|&&s| s > 1e-10 * largest.max(1.0)).count()
}

/// The `d` basis states, then `(|j⟩ + |k⟩)/√2` and `(|j⟩ + i|k⟩)/√2` for every
/// `j < k`: `d²` states in total.
pub fn build_projector_set(dim: usize) -> Result<ProjectorSet> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut projectors = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        projectors.push(QuditState::basis(dim, j)?);
    }
    for j in 0..dim {
        for k in j + 1..dim {
            for phase in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut v = vec![czero(); dim];
                v[j] = Complex64::new(1.0, 0.0);
                v[k] = phase;
                projectors.push(QuditState::new(v)?);
            }
        }
    }
    ProjectorSet::new(projectors)
}

/// One single-channel count per projector.
pub fn acquire_tomogram<R: Rng + ?Sized>(
    set: &ProjectorSet,
    prepared: &QuditState,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<u64>> {
    check_dims(set.dim(), prepared.dim())?;
    let c = noise.effective_crosstalk();
    set.projectors()
        .iter()
        .map(|proj| {
            let p = apply_crosstalk(projection_probability(proj, prepared)?, c);
            Ok(sample_channel_counts(p, noise, rng))
        })
        .collect()
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Complex64>>", into = "Vec<Vec<Complex64>>")]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates `entries` against the density-matrix invariants.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let rho = Self { entries };
        rho.check()?;
        Ok(rho)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn pure(psi: &QuditState) -> Self {
        let a = psi.amplitudes();
        Self {
            entries: CMatrix::from_fn(a.len(), a.len(), |r, c| a[r] * a[c].conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries.clone().symmetric_eigenvalues().iter().cloned().collect()
    }

    /// Checks Hermiticity, positivity and unit trace at [`DENSITY_TOLERANCE`].
    pub fn check(&self) -> Result<()> {
        let m = &self.entries;
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix("not a non-empty square matrix".into()));
        }
        if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidDensityMatrix("non-finite entry".into()));
        }
        let asymmetry = (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if asymmetry > DENSITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {asymmetry:e})"
            )));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOLERANCE || trace.im.abs() > DENSITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace}")));
        }
        let min_eig = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -DENSITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &QuditState) -> Result<Complex64> {
        check_dims(self.dim(), psi.dim())?;
        Ok(expectation(&self.entries, psi.amplitudes()))
    }
}

impl TryFrom<Vec<Vec<Complex64>>> for DensityMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDensityMatrix("rows of unequal length".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }
}

impl From<DensityMatrix> for Vec<Vec<Complex64>> {
    fn from(rho: DensityMatrix) -> Self {
        let m = rho.entries;
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
            .collect()
    }
}

fn expectation(m: &CMatrix, v: &[Complex64]) -> Complex64 {
    let n = v.len();
    let mut acc = czero();
    for r in 0..n {
        let row: Complex64 = (0..n).map(|c| m[(r, c)] * v[c]).sum();
        acc += v[r].conj() * row;
    }
    acc
}

/// Iteration budget of [`mle_reconstruct`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MleOptions {
    pub max_iter: usize,
    /// Stop once the largest entry change of `ρ` drops below this.
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleOutcome {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

/// Profiled Poisson log-likelihood of `counts` under `rho`.
pub fn log_likelihood(set: &ProjectorSet, counts: &[u64], rho: &DensityMatrix) -> Result<f64> {
    check_lengths(set, counts)?;
    check_dims(set.dim(), rho.dim())?;
    let q = probabilities(set, &rho.entries);
    Ok(likelihood_from(&q, counts))
}

fn probabilities(set: &ProjectorSet, rho: &CMatrix) -> Vec<f64> {
    set.projectors()
        .iter()
        .map(|p| expectation(rho, p.amplitudes()).re.max(0.0))
        .collect()
}

fn likelihood_from(q: &[f64], counts: &[u64]) -> f64 {
    let total: f64 = q.iter().sum();
    q.iter()
        .zip(counts)
        .filter(|(_, &n)| n > 0)
        .map(|(&qi, &n)| n as f64 * (qi / total).ln())
        .sum()
}

fn check_lengths(set: &ProjectorSet, counts: &[u64]) -> Result<()> {
    if set.len() != counts.len() {
        return Err(Error::LengthMismatch(format!(
            "{} counts for {} projectors",
            counts.len(),
            set.len()
        )));
    }
    Ok(())
}

/// Maximum-likelihood density matrix for `counts`.
pub fn mle_reconstruct(set: &ProjectorSet, counts: &[u64], options: MleOptions) -> Result<MleOutcome> {
    mle_reconstruct_observed(set, counts, options, |_, _, _| {})
}

/// [`mle_reconstruct`], calling `observe(iteration, ρ, L)` after every
/// accepted step.
pub fn mle_reconstruct_observed<F>(
    set: &ProjectorSet,
    counts: &[u64],
    options: MleOptions,
    mut observe: F,
) -> Result<MleOutcome>
where
    F: FnMut(usize, &DensityMatrix, f64),
{
    check_lengths(set, counts)?;
    if options.max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be positive".into()));
    }
    if !(options.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: options.tol,
        });
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoSignal);
    }
    let total = total as f64;
    let dim = set.dim();
    let operators: Vec<CMatrix> = set
        .projectors()
        .iter()
        .map(|p| DensityMatrix::pure(p).entries)
        .collect();
    let gram = operators.iter().fold(CMatrix::zeros(dim, dim), |acc, op| acc + op);
    let identity = CMatrix::identity(dim, dim);

    let mut rho = DensityMatrix::maximally_mixed(dim).entries;
    let mut q = probabilities(set, &rho);
    let mut likelihood = likelihood_from(&q, counts);
    let mut dilution = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iter {
        let q_total: f64 = q.iter().sum();
        let mut r = &gram * Complex64::new(-1.0 / q_total, 0.0);
        for ((op, &qi), &n) in operators.iter().zip(&q).zip(counts) {
            if n > 0 {
                r += op * Complex64::new(n as f64 / (total * qi), 0.0);
            }
        }

        // Shrink the step until the likelihood does not decrease.
        let accepted = loop {
            let m = &identity + &r * Complex64::new(dilution, 0.0);
            let mut candidate = &m * &rho * &m;
            candidate = (&candidate + candidate.adjoint()) * Complex64::new(0.5, 0.0);
            let trace = candidate.trace().re;
            if trace > 0.0 && trace.is_finite() {
                candidate /= Complex64::new(trace, 0.0);
                let cq = probabilities(set, &candidate);
                let cl = likelihood_from(&cq, counts);
                if cl >= likelihood {
                    break Some((candidate, cq, cl));
                }
            }
            dilution *= 0.5;
            if dilution < MIN_DILUTION {
                break None;
            }
        };
        let Some((candidate, cq, cl)) = accepted else {
            // No ascent direction left at machine precision.
            converged = true;
            break;
        };

        let change = (&candidate - &rho).iter().map(|c| c.norm()).fold(0.0, f64::max);
        rho = candidate;
        q = cq;
        likelihood = cl;
        iterations += 1;
        observe(iterations, &DensityMatrix { entries: rho.clone() }, likelihood);
        if change < options.tol {
            converged = true;
            break;
        }
        dilution = (dilution * 2.0).min(MAX_DILUTION);
    }

    Ok(MleOutcome {
        rho: DensityMatrix::new(rho)?,
        iterations,
        converged,
        log_likelihood: likelihood,
    })
}

/// `⟨ψ|ρ|ψ⟩`, rejecting matrices that violate the density-matrix invariants.
pub fn fidelity_to_pure(rho: &DensityMatrix, psi: &QuditState) -> Result<f64> {
    rho.check()?;
    let value = rho.expectation(psi)?;
    if value.im.abs() > DENSITY_TOLERANCE {
        return Err(Error::InvalidDensityMatrix(format!(
            "complex expectation value {value}"
        )));
    }
    Ok(value.re.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::haar_random_state;
    use crate::seed::SimRng;
    use rand::SeedableRng;

    fn exact_counts(set: &ProjectorSet, psi: &QuditState, n: f64) -> Vec<u64> {
        set.projectors()
            .iter()
            .map(|p| (n * projection_probability(p, psi).unwrap()).round() as u64)
            .collect()
    }

    #[test]
    fn projector_counts_and_rank() {
        for (d, n) in [(2, 4), (3, 9), (5, 25)] {
            let set = build_projector_set(d).unwrap();
            assert_eq!(set.len(), n);
            assert_eq!(operator_rank(set.projectors()), d * d);
        }
        assert!(build_projector_set(1).is_err());
    }

    #[test]
    fn incomplete_sets_are_rejected() {
        let basis: Vec<QuditState> = (0..3).map(|j| QuditState::basis(3, j).unwrap()).collect();
        assert!(matches!(
            ProjectorSet::new(basis),
            Err(Error::NotInformationallyComplete { rank: 3, required: 9 })
        ));
    }

    #[test]
    fn tomogram_examples() {
        let set = build_projector_set(3).unwrap();
        let e0 = QuditState::basis(3, 0).unwrap();
        let mut rng = SimRng::seed_from_u64(1);
        let counts = acquire_tomogram(&set, &e0, &NoiseModel::exact(10_000), &mut rng).unwrap();
        assert_eq!(counts.len(), 9);
        assert_eq!(counts[0], 10_000);
        assert_eq!(counts[1], 0);
        // Projector 3 is (|0⟩ + |1⟩)/√2.
        let noise = NoiseModel::shot_noise_only(10_000);
        let mean = (0..1_000)
            .map(|_| acquire_tomogram(&set, &e0, &noise, &mut rng).unwrap()[3] as f64)
            .sum::<f64>()
            / 1_000.0;
        assert!((mean - 5_000.0).abs() < 150.0);
    }

    #[test]
    fn exact_counts_recover_the_pure_state() {
        let set = build_projector_set(3).unwrap();
        let mut rng = SimRng::seed_from_u64(2);
        let psi = haar_random_state(3, &mut rng).unwrap();
        let counts = exact_counts(&set, &psi, 1e4);
        let out = mle_reconstruct(&set, &counts, MleOptions::default()).unwrap();
        assert!(fidelity_to_pure(&out.rho, &psi).unwrap() > 0.999);
    }

    #[test]
    fn equal_counts_give_maximally_mixed() {
        let set = build_projector_set(2).unwrap();
        let out = mle_reconstruct(&set, &[250; 4], MleOptions::default()).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        let dev = (out.rho.entries() - mixed.entries())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-3, "deviation {dev}");
    }

    #[test]
    fn all_zero_counts_have_no_signal() {
        let set = build_projector_set(2).unwrap();
        assert!(matches!(
            mle_reconstruct(&set, &[0; 4], MleOptions::default()),
            Err(Error::NoSignal)
        ));
        assert!(mle_reconstruct(&set, &[1; 3], MleOptions::default()).is_err());
    }

    #[test]
    fn fidelity_to_pure_examples() {
        let mut rng = SimRng::seed_from_u64(3);
        let psi = haar_random_state(4, &mut rng).unwrap();
        assert!((fidelity_to_pure(&DensityMatrix::pure(&psi), &psi).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!((fidelity_to_pure(&mixed, &psi).unwrap() - 0.25).abs() < 1e-12);
        let e0 = QuditState::basis(4, 0).unwrap();
        let e1 = QuditState::basis(4, 1).unwrap();
        assert_eq!(fidelity_to_pure(&DensityMatrix::pure(&e1), &e0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        let mut m = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let mut rng = SimRng::seed_from_u64(4);
        let psi = haar_random_state(3, &mut rng).unwrap();
        let rho = DensityMatrix::pure(&psi);
        let text = serde_json::to_string(&rho).unwrap();
        assert_eq!(serde_json::from_str::<DensityMatrix>(&text).unwrap(), rho);
        let set = build_projector_set(3).unwrap();
        let text = serde_json::to_string(&set).unwrap();
        assert_eq!(serde_json::from_str::<ProjectorSet>(&text).unwrap(), set);
    }
}
