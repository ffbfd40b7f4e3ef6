//! Reference computations shared by the integration tests. These work on raw
//! amplitude vectors and avoid the library's own numerics.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use sgt_core::mle::DensityMatrix;
use sgt_core::QuditState;

pub fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    dot.norm_sqr() / (na * nb)
}

pub fn infidelity(a: &QuditState, b: &QuditState) -> f64 {
    1.0 - overlap(a.amplitudes(), b.amplitudes())
}

pub fn gaussian_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// A state with overlap exactly `1 − infidelity` with `target`.
pub fn state_at_infidelity<R: Rng>(target: &QuditState, infidelity: f64, rng: &mut R) -> QuditState {
    let t = target.amplitudes();
    let mut v = gaussian_vector(t.len(), rng);
    let proj: Complex64 = t.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
    for (vi, ti) in v.iter_mut().zip(t) {
        *vi -= proj * ti;
    }
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let amps = t
        .iter()
        .zip(&v)
        .map(|(ti, vi)| ti * (1.0 - infidelity).sqrt() + vi / norm * infidelity.sqrt())
        .collect();
    QuditState::new(amps).unwrap()
}

/// Complex gradient `∂F/∂Re ψ_j + i ∂F/∂Im ψ_j` of `F(ψ) = |⟨t|ψ/‖ψ‖⟩|²`
/// by central differences.
pub fn finite_difference_gradient(target: &[Complex64], psi: &[Complex64], step: f64) -> Vec<Complex64> {
    let f = |x: &[Complex64]| overlap(target, x);
    let mut grad = vec![Complex64::new(0.0, 0.0); psi.len()];
    for j in 0..psi.len() {
        for (part, unit) in [(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(0.0, 1.0))] {
            let mut up = psi.to_vec();
            let mut down = psi.to_vec();
            up[j] += unit * step;
            down[j] -= unit * step;
            let d = (f(&up) - f(&down)) / (2.0 * step);
            if part == 0 {
                grad[j].re = d;
            } else {
                grad[j].im = d;
            }
        }
    }
    grad
}

pub fn real_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Median by sorting, averaging the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Hermiticity, trace and positivity of `rho`, checked through the real
/// symmetric embedding `[[Re, −Im], [Im, Re]]`.
pub fn physicality_violation(rho: &DensityMatrix, tol: f64) -> Option<String> {
    let m = rho.entries();
    let d = m.nrows();
    let mut herm = 0.0f64;
    let mut trace = Complex64::new(0.0, 0.0);
    for i in 0..d {
        trace += m[(i, i)];
        for j in 0..d {
            herm = herm.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if herm > tol {
        return Some(format!("not Hermitian ({herm:e})"));
    }
    if (trace - 1.0).norm() > tol {
        return Some(format!("trace {trace}"));
    }
    let real = DMatrix::from_fn(2 * d, 2 * d, |r, c| {
        let z = m[(r % d, c % d)];
        match (r < d, c < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let min = SymmetricEigen::new(real)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    (min < -tol).then(|| format!("eigenvalue {min:e}"))
}
