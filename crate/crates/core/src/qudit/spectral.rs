use num_complex::Complex64;

use super::QuditState;
use crate::error::{Error, Result};

/// Normalized Hermite-Gaussian function of order `order` at `x`,
/// `H_n(x) e^{−x²/2} / √(2ⁿ n! √π)` with physicists' Hermite polynomials.
///
/// Evaluated with the three-term recurrence on the normalized functions so
/// high orders neither overflow nor lose precision.
pub fn hermite_gaussian(order: usize, x: f64) -> f64 {
    let mut prev = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if order == 0 {
        return prev;
    }
    let mut curr = std::f64::consts::SQRT_2 * x * prev;
    for n in 1..order {
        let n = n as f64;
        let next = (2.0 / (n + 1.0)).sqrt() * x * curr - (n / (n + 1.0)).sqrt() * prev;
        prev = curr;
        curr = next;
    }
    curr
}

/// Complex spectral amplitude `Σ_j c_j · HG_j(x / w) / √w` on `grid`.
///
/// The `1/√w` factor keeps the profile unit norm in `x` for any mode width.
pub fn render_spectral_amplitude(
    state: &QuditState,
    grid: &[f64],
    mode_width: f64,
) -> Result<Vec<Complex64>> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("frequency grid"));
    }
    if !(mode_width > 0.0) || !mode_width.is_finite() {
        return Err(Error::InvalidParameter {
            name: "mode_width",
            value: mode_width,
        });
    }
    let scale = mode_width.sqrt().recip();
    Ok(grid
        .iter()
        .map(|&x| {
            let u = x / mode_width;
            state
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(j, c)| c * (hermite_gaussian(j, u) * scale))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(half_span: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| -half_span + 2.0 * half_span * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn ground_mode_is_gaussian_peaked_at_zero() {
        let g = grid(3.0, 61);
        let state = QuditState::basis(3, 0).unwrap();
        let f = render_spectral_amplitude(&state, &g, 1.0).unwrap();
        let peak = f
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(g[peak], 0.0);
        for (x, v) in g.iter().zip(&f) {
            let gauss = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
            assert!((v.re - gauss).abs() < 1e-14 && v.im == 0.0);
        }
    }

    #[test]
    fn first_mode_is_odd() {
        let g = grid(3.0, 61);
        let state = QuditState::basis(3, 1).unwrap();
        let f = render_spectral_amplitude(&state, &g, 1.0).unwrap();
        assert_eq!(f[30].norm(), 0.0);
        for i in 0..30 {
            assert!((f[i] + f[60 - i]).norm() < 1e-14);
        }
    }

    #[test]
    fn quadrature_norm_is_one() {
        let width = 2.5;
        let n = 2001;
        let g = grid(6.0 * width, n);
        let dx = g[1] - g[0];
        let state = QuditState::new(vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.5, 0.2),
            Complex64::new(0.1, -0.7),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.0, 0.25),
        ])
        .unwrap();
        let f = render_spectral_amplitude(&state, &g, width).unwrap();
        let norm: f64 = f.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
        assert!((norm - 1.0).abs() < 0.01, "norm {norm}");
    }

    #[test]
    fn hermite_gaussians_are_orthonormal() {
        let g = grid(12.0, 4001);
        let dx = g[1] - g[0];
        for m in 0..6 {
            for n in 0..6 {
                let overlap: f64 = g
                    .iter()
                    .map(|&x| hermite_gaussian(m, x) * hermite_gaussian(n, x))
                    .sum::<f64>()
                    * dx;
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((overlap - expected).abs() < 1e-8, "<{m}|{n}> = {overlap}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let state = QuditState::basis(2, 0).unwrap();
        assert!(render_spectral_amplitude(&state, &[], 1.0).is_err());
        assert!(render_spectral_amplitude(&state, &[0.0], 0.0).is_err());
    }
}
