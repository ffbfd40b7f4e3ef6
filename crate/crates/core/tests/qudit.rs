mod common;

use sgt_core::seed::rng_from_seed;
use sgt_core::{fidelity, haar_random_state, perturb_pair, sample_direction, infidelity};

#[test]
fn haar_pair_overlaps_follow_beta() {
    for dim in [3usize, 5] {
        let mut rng = rng_from_seed(dim as u64);
        let n = 10_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let a = haar_random_state(dim, &mut rng).unwrap();
                let b = haar_random_state(dim, &mut rng).unwrap();
                common::overlap(a.amplitudes(), b.amplitudes())
            })
            .collect();
        let d = common::ks_statistic(&samples, |x| 1.0 - (1.0 - x).powi(dim as i32 - 1));
        assert!(d < common::ks_critical_001(n), "d={dim}: KS {d}");
    }
}

#[test]
fn fidelity_agrees_with_reference_and_is_symmetric() {
    let mut rng = rng_from_seed(3);
    for dim in 1..8 {
        let a = haar_random_state(dim, &mut rng).unwrap();
        let b = haar_random_state(dim, &mut rng).unwrap();
        let f = fidelity(&a, &b).unwrap();
        assert_eq!(f, fidelity(&b, &a).unwrap());
        assert!((f - common::overlap(a.amplitudes(), b.amplitudes())).abs() < 1e-12);
    }
}

#[test]
fn small_perturbations_cost_quadratically() {
    let mut rng = rng_from_seed(8);
    for dim in [2, 3, 5] {
        let psi = haar_random_state(dim, &mut rng).unwrap();
        let delta = sample_direction(dim, &mut rng).unwrap();
        let at = |beta| infidelity(&perturb_pair(&psi, &delta, beta).unwrap().0, &psi).unwrap();
        let ratio = at(1e-3) / at(5e-4);
        assert!((4.0 / 1.5..=4.0 * 1.5).contains(&ratio), "d={dim}: ratio {ratio}");
    }
}

#[test]
fn chained_operations_stay_normalized() {
    let mut rng = rng_from_seed(12);
    let mut psi = haar_random_state(5, &mut rng).unwrap();
    for k in 0..10_000 {
        let delta = sample_direction(5, &mut rng).unwrap();
        let (plus, minus) = perturb_pair(&psi, &delta, 0.05 + (k % 7) as f64).unwrap();
        psi = if k % 2 == 0 { plus } else { minus };
        let norm: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm.sqrt() - 1.0).abs() < 1e-10);
    }
}
