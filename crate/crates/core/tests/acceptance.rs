//! Acceptance run: checks the reference figures of merit against the
//! calibrated simulation and prints one PASS/FAIL line per criterion.
//! Exits nonzero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use sgt_core::experiments::{
    compare_with_batch, run_batch, run_error_budget, BatchResult, BudgetToggle, ErrorBudget,
    ExperimentPlan, RunOutcome, SummaryStats,
};
use sgt_core::measurement::{sample_channel_counts, ExactOracle, MeasurementOracle, NoiseModel};
use sgt_core::mle::{acquire_tomogram, build_projector_set, mle_reconstruct_observed, MleOptions};
use sgt_core::seed::rng_from_seed;
use sgt_core::sgt::{gradient, pseudo_normalized_difference, replay_records, run_sgt, SgtConfig};
use sgt_core::{haar_random_state, perturb_pair, sample_direction, QuditState};

const RUNTIME_BUDGET: Duration = Duration::from_secs(600);

struct Report {
    failures: usize,
}

impl Report {
    fn verdict(&mut self, id: &str, title: &str, pass: bool, details: &[String]) {
        if !pass {
            self.failures += 1;
        }
        println!("{} criterion {id}: {title}", if pass { "PASS" } else { "FAIL" });
        for line in details {
            println!("       {line}");
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn cell_stats(batch: &BatchResult, dim: usize, n: u64) -> SummaryStats {
    batch
        .get(dim, n)
        .unwrap_or_else(|| panic!("batch has no cell d={dim} N={n}"))
        .summary()
        .expect("cell summary")
}

fn table_fidelities(report: &mut Report, batch: &BatchResult, elapsed: Duration) {
    let reference = [
        (3, 100_000, 0.9935),
        (3, 10_000, 0.9940),
        (3, 1_000, 0.9924),
        (5, 100_000, 0.9906),
        (5, 10_000, 0.9899),
        (5, 1_000, 0.9877),
    ];
    let mut pass = elapsed < RUNTIME_BUDGET;
    let mut details = Vec::new();
    for (dim, n, target) in reference {
        let got = cell_stats(batch, dim, n).final_fidelity.median;
        let ok = (got - target).abs() <= 0.010;
        pass &= ok;
        details.push(format!("d={dim} N={n}: median {} vs {} (±1.00 pp) {}", pct(got), pct(target), mark(ok)));
    }
    details.push(format!("batch runtime {:.1}s (budget {}s)", elapsed.as_secs_f64(), RUNTIME_BUDGET.as_secs()));
    report.verdict("1", "high-count SGT fidelities within 1 pp of reference values", pass, &details);
}

fn low_count_regime(report: &mut Report, batch: &BatchResult) {
    let mut pass = true;
    let mut details = Vec::new();
    for (dim, target, reach_limit) in [(3, 0.930, 120), (5, 0.921, 240)] {
        let stats = cell_stats(batch, dim, 100);
        let got = stats.final_fidelity.median;
        let ok = (got - target).abs() <= 0.04;
        let reach = stats.first_iteration_reaching(0.90);
        let reach_ok = reach.is_some_and(|k| k <= reach_limit);
        pass &= ok && reach_ok;
        details.push(format!(
            "d={dim} N=100 K={}: median {} vs {} (±4 pp) {}; 90% at iteration {:?} (≤ {reach_limit}) {}",
            stats.iterations(),
            pct(got),
            pct(target),
            mark(ok),
            reach,
            mark(reach_ok)
        ));
    }
    report.verdict("2", "low-count regime fidelity and convergence", pass, &details);
}

fn high_count_speed(report: &mut Report, batch: &BatchResult) {
    let mut pass = true;
    let mut details = Vec::new();
    for (dim, limit) in [(3, 15), (5, 30)] {
        for n in [10_000, 100_000] {
            let reach = cell_stats(batch, dim, n).first_iteration_reaching(0.90);
            let ok = reach.is_some_and(|k| k <= limit);
            pass &= ok;
            details.push(format!("d={dim} N={n}: 90% at iteration {reach:?} (≤ {limit}) {}", mark(ok)));
        }
    }
    report.verdict("3", "convergence speed at high counts", pass, &details);
}

fn plateau_attribution(report: &mut Report, budget: &ErrorBudget) {
    let get = |toggle, n| {
        budget
            .get(toggle, 5, n)
            .unwrap_or_else(|| panic!("budget has no {toggle:?} at N={n}"))
    };
    let mut details = Vec::new();
    let base = get(BudgetToggle::Baseline, 10_000);
    let base_q25 = *base.lower_quartile.last().unwrap();
    let base_q75 = *base.upper_quartile.last().unwrap();
    let no_prep = get(BudgetToggle::NoPreparation, 10_000).final_median_infidelity();
    let prep_ok = no_prep < base_q25;
    details.push(format!(
        "N=10000 baseline median {:.5} band [{base_q25:.5}, {base_q75:.5}]; without preparation error {no_prep:.5} {}",
        base.final_median_infidelity(),
        mark(prep_ok)
    ));
    let mut pass = prep_ok;
    for n in [1_000, 10_000] {
        let base = get(BudgetToggle::Baseline, n);
        for toggle in [BudgetToggle::NoEnvironment, BudgetToggle::NoCrosstalk] {
            let got = get(toggle, n).final_median_infidelity();
            let lo = *base.lower_quartile.last().unwrap();
            let hi = *base.upper_quartile.last().unwrap();
            let ok = (lo..=hi).contains(&got);
            pass &= ok;
            details.push(format!("N={n} {}: final median {got:.5} within [{lo:.5}, {hi:.5}] {}", toggle.label(), mark(ok)));
        }
    }
    let degradation = |n| {
        get(BudgetToggle::Environment10x, n).final_median_infidelity()
            - get(BudgetToggle::Baseline, n).final_median_infidelity()
    };
    let (low, high) = (degradation(1_000), degradation(10_000));
    let env_ok = low > high;
    pass &= env_ok;
    details.push(format!("environment x10 raises the final median by {low:.5} at N=1000 and {high:.5} at N=10000 {}", mark(env_ok)));
    report.verdict("4", "preparation infidelity limits the plateau", pass, &details);
}

fn method_ordering(report: &mut Report, plan: &ExperimentPlan, batch: &BatchResult) {
    let table = compare_with_batch(plan, batch).expect("comparison table");
    let mut pass = true;
    let mut details = Vec::new();
    for row in &table.rows {
        let margin = row.sgt.median - row.mlst.median;
        let needed = if (row.dim, row.max_counts) == (5, 100) { 0.10 } else { 0.0 };
        let ok = margin >= needed;
        pass &= ok;
        details.push(format!(
            "d={} N={}: SGT {} MLST {} margin {:+.2} pp (≥ {:.0} pp) {}",
            row.dim,
            row.max_counts,
            pct(row.sgt.median),
            pct(row.mlst.median),
            100.0 * margin,
            100.0 * needed,
            mark(ok)
        ));
    }
    report.verdict("5", "SGT at least as good as MLST in every cell", pass, &details);
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "MISS"
    }
}

fn noiseless_convergence() -> (bool, String) {
    let mut converged = 0;
    for seed in 0..50u64 {
        let target = haar_random_state(3, &mut rng_from_seed(1_000 + seed)).unwrap();
        let config = SgtConfig::new(3, 200, seed);
        let traj = run_sgt(&config, &mut ExactOracle::new(target.clone(), 1_000_000_000), None).unwrap();
        if common::infidelity(&traj.final_estimate, &target) < 1e-3 {
            converged += 1;
        }
    }
    (converged >= 45, format!("noiseless d=3 K=200: {converged}/50 runs below 1e-3 (need 45)"))
}

fn gradient_alignment() -> (bool, String) {
    let mut rng = rng_from_seed(77);
    let trials = 1000;
    let mut aligned = 0;
    for trial in 0..trials {
        let dim = if trial % 2 == 0 { 3 } else { 5 };
        let target = haar_random_state(dim, &mut rng).unwrap();
        let psi = common::state_at_infidelity(&target, 0.5, &mut rng);
        let delta = sample_direction(dim, &mut rng).unwrap();
        let beta = 0.1;
        let (plus, minus) = perturb_pair(&psi, &delta, beta).unwrap();
        let (n_plus, n_minus) = ExactOracle::new(target.clone(), 1_000_000_000).measure(&plus, &minus).unwrap();
        let g = gradient(pseudo_normalized_difference(n_plus, n_minus), &delta, beta).unwrap();
        let fd = common::finite_difference_gradient(target.amplitudes(), psi.amplitudes(), 1e-5);
        if common::real_inner(&g, &fd) > 0.0 {
            aligned += 1;
        }
    }
    let frac = aligned as f64 / trials as f64;
    (frac >= 0.95, format!("gradient alignment: {aligned}/{trials} positive ({:.1}%, need 95%)", 100.0 * frac))
}

fn haar_distribution() -> (bool, String) {
    let n = 10_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for dim in [3usize, 5] {
        let mut rng = rng_from_seed(4242 + dim as u64);
        let basis = QuditState::basis(dim, 0).unwrap();
        let samples: Vec<f64> = (0..n)
            .map(|_| common::overlap(basis.amplitudes(), haar_random_state(dim, &mut rng).unwrap().amplitudes()))
            .collect();
        let stat = common::ks_statistic(&samples, |x| 1.0 - (1.0 - x).powi(dim as i32 - 1));
        let crit = common::ks_critical_001(n);
        pass &= stat < crit;
        parts.push(format!("d={dim} D={stat:.4}"));
    }
    (pass, format!("Haar overlap KS vs Beta(1,d-1): {} (critical {:.4})", parts.join(", "), common::ks_critical_001(n)))
}

fn background_channel() -> (bool, String) {
    let noise = NoiseModel::default();
    let mut rng = rng_from_seed(2718);
    let draws: Vec<f64> = (0..10_000).map(|_| sample_channel_counts(0.0, &noise, &mut rng) as f64).collect();
    let (mean, std) = common::mean_and_std(&draws);
    let ok = (mean - 70.0).abs() <= 1.5 && (std - 14.0).abs() <= 1.5;
    (ok, format!("background at p=0: mean {mean:.2} (70 ± 1.5), std {std:.2} (14 ± 1.5)"))
}

fn mle_invariants() -> (bool, String) {
    let mut rng = rng_from_seed(31337);
    let mut violations = Vec::new();
    let mut steps = 0usize;
    for case in 0..100 {
        let dim = rng.random_range(2..=5);
        let n = 10u64.pow(rng.random_range(2..=5));
        let set = build_projector_set(dim).unwrap();
        let prepared = haar_random_state(dim, &mut rng).unwrap();
        let counts = acquire_tomogram(&set, &prepared, &NoiseModel::with_max_counts(n), &mut rng).unwrap();
        let mut last = f64::NEG_INFINITY;
        let options = MleOptions { max_iter: 1000, ..MleOptions::default() };
        let outcome = mle_reconstruct_observed(&set, &counts, options, |iter, rho, l| {
            steps += 1;
            if l < last - 1e-12 * last.abs() {
                violations.push(format!("case {case} iteration {iter}: likelihood {last} -> {l}"));
            }
            last = l;
            if let Some(v) = common::physicality_violation(rho, 1e-10) {
                violations.push(format!("case {case} iteration {iter}: {v}"));
            }
        });
        match outcome {
            Ok(out) => {
                if let Some(v) = common::physicality_violation(&out.rho, 1e-10) {
                    violations.push(format!("case {case} final: {v}"));
                }
            }
            Err(e) => violations.push(format!("case {case}: {e}")),
        }
    }
    let detail = match violations.first() {
        None => format!("MLE over 100 fuzzed tomograms: likelihood monotone and state physical at all {steps} steps"),
        Some(first) => format!("MLE invariants violated {} times, first: {first}", violations.len()),
    };
    (violations.is_empty(), detail)
}

fn bit_exact_replay(batch: &BatchResult) -> (bool, String) {
    let outcomes: Vec<&RunOutcome> = batch.conditions.iter().flat_map(|c| &c.outcomes).collect();
    let mut mismatches = 0;
    for outcome in &outcomes {
        let stored: RunOutcome = serde_json::from_str(&serde_json::to_string(outcome).unwrap()).unwrap();
        let regenerated = stored.spec.execute().unwrap();
        let traj = &stored.trajectory;
        let replayed = replay_records(&traj.initial_estimate, &traj.records).unwrap();
        let records_agree = replayed.iter().zip(&traj.records).all(|(s, r)| *s == r.estimate);
        if regenerated != **outcome || stored != **outcome || !records_agree {
            mismatches += 1;
        }
    }
    (
        mismatches == 0 && !outcomes.is_empty(),
        format!("replay: {}/{} stored trajectories regenerate bit-exactly", outcomes.len() - mismatches, outcomes.len()),
    )
}

fn property_suite(report: &mut Report, batch: &BatchResult) {
    let checks = [
        noiseless_convergence(),
        gradient_alignment(),
        haar_distribution(),
        background_channel(),
        mle_invariants(),
        bit_exact_replay(batch),
    ];
    let pass = checks.iter().all(|(ok, _)| *ok);
    let details: Vec<String> = checks.iter().map(|(ok, d)| format!("{d} {}", mark(*ok))).collect();
    report.verdict("6", "noise-independent property suite", pass, &details);
}

fn main() -> ExitCode {
    let plan = ExperimentPlan::default();
    println!(
        "acceptance: cross-talk c = {}, {} states per cell, base seed {}",
        plan.noise.crosstalk, plan.population, plan.base_seed
    );
    let started = Instant::now();
    let batch = run_batch(&plan).expect("batch");
    let batch_time = started.elapsed();
    let failed_runs = batch.failures().count();
    if failed_runs > 0 {
        println!("warning: {failed_runs} runs failed and were skipped");
    }
    let budget = run_error_budget(&plan).expect("error budget");

    let mut report = Report { failures: 0 };
    table_fidelities(&mut report, &batch, batch_time);
    low_count_regime(&mut report, &batch);
    high_count_speed(&mut report, &batch);
    plateau_attribution(&mut report, &budget);
    method_ordering(&mut report, &plan, &batch);
    property_suite(&mut report, &batch);

    println!(
        "acceptance: {} of 6 criteria passed in {:.1}s",
        6 - report.failures,
        started.elapsed().as_secs_f64()
    );
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
