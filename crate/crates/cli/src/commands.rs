use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sgt_core::experiments::{
    compare_sgt_mlst, run_batch, run_error_budget, summarize, ExperimentPlan,
    QuartileSummary, RunFailure, RunOutcome, RunSpec, SummaryStats,
};
use sgt_core::io::{
    infidelity_curve_from_rows, read_summary_csv, read_trajectory_csv, write_summary_csv,
    write_trajectory_csv, SummaryCurve,
};
use sgt_core::sgt::Trajectory;

use crate::config::LoadedConfig;
use crate::output::OutputDir;
use crate::plot::{self, Series};
use crate::{Command, ConfigArgs};

pub enum Outcome {
    Complete,
    PartialFailure(usize),
}

pub struct Log {
    level: i8,
}

impl Log {
    pub fn new(verbose: u8, quiet: bool) -> Self {
        Self {
            level: if quiet { -1 } else { verbose.min(2) as i8 },
        }
    }

    pub fn info(&self, msg: impl AsRef<str>) {
        if self.level >= 0 {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub fn debug(&self, msg: impl AsRef<str>) {
        if self.level >= 1 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn dispatch(command: Command, log: &Log) -> Result<Outcome> {
    match command {
        Command::Run(args) => cmd_run(&args, log),
        Command::Batch { args, summaries_only } => cmd_batch(&args, summaries_only, log),
        Command::Budget(args) => cmd_budget(&args, log),
        Command::Compare(args) => cmd_compare(&args, log),
        Command::Summarize { inputs, out } => cmd_summarize(&inputs, &out, log),
        Command::Plot {
            inputs,
            out,
            labels,
            title,
            name,
            linear,
        } => cmd_plot(&inputs, &out, &labels, &title, &name, !linear, log),
        Command::Replay { artifact, trajectory } => cmd_replay(&artifact, trajectory.as_deref(), log),
    }
}

struct Setup {
    config: LoadedConfig,
    seed: u64,
    out: OutputDir,
}

fn setup(args: &ConfigArgs, command: &str) -> Result<Setup> {
    let config = LoadedConfig::load(&args.config)?;
    let seed = config.config.seed(args.seed);
    let mut out = OutputDir::create(&args.out, command)?;
    out.set_config(&config.path, &config.bytes, seed);
    Ok(Setup { config, seed, out })
}

fn plan_from(setup: &Setup) -> Result<ExperimentPlan> {
    let plan = setup.config.config.plan(setup.seed);
    plan.validate()
        .with_context(|| format!("invalid plan in {}", setup.config.path.display()))?;
    Ok(plan)
}

fn trajectory_csv(trajectory: &Trajectory) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    write_trajectory_csv(&mut bytes, trajectory)?;
    Ok(bytes)
}

fn summary_csv(stats: &SummaryStats) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    write_summary_csv(&mut bytes, stats)?;
    Ok(bytes)
}

fn finish(out: OutputDir, failures: &[RunFailure], log: &Log) -> Result<Outcome> {
    let mut out = out;
    out.write_json("failures.json", &failures)?;
    let manifest = out.finish()?;
    log.debug(format!("manifest: {}", manifest.display()));
    Ok(if failures.is_empty() {
        Outcome::Complete
    } else {
        Outcome::PartialFailure(failures.len())
    })
}

fn cmd_run(args: &ConfigArgs, log: &Log) -> Result<Outcome> {
    let mut setup = setup(args, "run")?;
    let spec = setup.config.config.run_spec(setup.seed);
    setup.config.config.scales.validate().context("invalid [scales]")?;
    spec.validate()
        .with_context(|| format!("invalid run in {}", setup.config.path.display()))?;
    log.debug(format!(
        "run: d={} N={} K={} seed={}",
        spec.dim, spec.noise.max_counts, spec.iterations, setup.seed
    ));
    let outcome = spec.execute()?;
    setup.out.write("run.csv", &trajectory_csv(&outcome.trajectory)?)?;
    setup.out.write_json("run.spec.json", &outcome.spec)?;
    setup.out.write_json("run.json", &outcome)?;
    println!(
        "d={} N={} iterations={} final fidelity {:.6} final infidelity {:.3e}",
        spec.dim,
        spec.noise.max_counts,
        outcome.trajectory.records.len(),
        outcome.final_fidelity,
        1.0 - outcome.final_fidelity
    );
    finish(setup.out, &[], log)
}

#[derive(Serialize)]
struct ConditionReport {
    condition: String,
    dim: usize,
    max_counts: u64,
    completed: usize,
    failed: usize,
    iterations: usize,
    final_fidelity: QuartileSummary,
    first_iteration_90: Option<usize>,
}

fn cmd_batch(args: &ConfigArgs, summaries_only: bool, log: &Log) -> Result<Outcome> {
    let mut setup = setup(args, "batch")?;
    let plan = plan_from(&setup)?;
    log.info(format!(
        "batch: {} conditions x {} states",
        plan.conditions().len(),
        plan.population
    ));
    let batch = run_batch(&plan)?;
    let mut reports = Vec::new();
    for runs in &batch.conditions {
        let name = runs.condition.to_string();
        if !summaries_only {
            for (outcome, index) in runs.outcomes.iter().zip(completed_indices(plan.population, &runs.failures)) {
                let stem = format!("trajectories/{name}/state_{index:03}");
                setup.out.write(&format!("{stem}.csv"), &trajectory_csv(&outcome.trajectory)?)?;
                setup.out.write_json(&format!("{stem}.spec.json"), &outcome.spec)?;
            }
        }
        if runs.outcomes.is_empty() {
            log.info(format!("{name}: every run failed"));
            continue;
        }
        let stats = runs.summary()?;
        setup.out.write(&format!("summaries/{name}.csv"), &summary_csv(&stats)?)?;
        let report = ConditionReport {
            condition: name.clone(),
            dim: runs.condition.dim,
            max_counts: runs.condition.max_counts,
            completed: runs.outcomes.len(),
            failed: runs.failures.len(),
            iterations: stats.iterations(),
            final_fidelity: stats.final_fidelity,
            first_iteration_90: stats.first_iteration_reaching(0.9),
        };
        println!(
            "{name}: median final fidelity {:.2}% +{:.2}/-{:.2}, 90% at iteration {}",
            100.0 * report.final_fidelity.median,
            100.0 * report.final_fidelity.upper,
            100.0 * report.final_fidelity.lower,
            report.first_iteration_90.map_or("-".to_string(), |k| k.to_string())
        );
        reports.push(report);
    }
    setup.out.write_json("batch.json", &reports)?;
    let failures: Vec<RunFailure> = batch.failures().cloned().collect();
    finish(setup.out, &failures, log)
}

fn completed_indices(population: usize, failures: &[RunFailure]) -> impl Iterator<Item = usize> + '_ {
    (0..population).filter(move |i| failures.iter().all(|f| f.state_index != *i))
}

#[derive(Serialize)]
struct BudgetReport {
    toggle: &'static str,
    dim: usize,
    max_counts: u64,
    final_median_infidelity: f64,
    final_q25: f64,
    final_q75: f64,
    failed: usize,
}

fn cmd_budget(args: &ConfigArgs, log: &Log) -> Result<Outcome> {
    let mut setup = setup(args, "budget")?;
    let plan = plan_from(&setup)?;
    log.info(format!(
        "budget: d={:?} N={:?}, {} states",
        plan.budget_dims, plan.budget_count_levels, plan.population
    ));
    let budget = run_error_budget(&plan)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for entry in &budget.entries {
        let label = entry.toggle.label();
        let name = format!("{label}_d{}_N{}", entry.dim, entry.max_counts);
        setup.out.write(&format!("budget/{name}.csv"), &summary_csv(&entry.stats)?)?;
        let report = BudgetReport {
            toggle: label,
            dim: entry.dim,
            max_counts: entry.max_counts,
            final_median_infidelity: entry.stats.final_median_infidelity(),
            final_q25: *entry.stats.lower_quartile.last().expect("nonempty summary"),
            final_q75: *entry.stats.upper_quartile.last().expect("nonempty summary"),
            failed: entry.failures.len(),
        };
        println!(
            "{name}: final median infidelity {:.5} [{:.5}, {:.5}]",
            report.final_median_infidelity, report.final_q25, report.final_q75
        );
        reports.push(report);
        failures.extend(entry.failures.iter().cloned());
    }
    setup.out.write_json("budget.json", &reports)?;
    finish(setup.out, &failures, log)
}

fn cmd_compare(args: &ConfigArgs, log: &Log) -> Result<Outcome> {
    let mut setup = setup(args, "compare")?;
    let plan = plan_from(&setup)?;
    log.info(format!(
        "compare: {} conditions x {} states, SGT and maximum likelihood",
        plan.conditions().len(),
        plan.population
    ));
    let table = compare_sgt_mlst(&plan)?;
    let rendered = table.render();
    print!("{rendered}");
    setup.out.write("comparison.txt", rendered.as_bytes())?;
    let mut csv = String::from("dim,max_counts,method,median,q25,q75\n");
    for row in &table.rows {
        for (method, s) in [("sgt", &row.sgt), ("mlst", &row.mlst)] {
            csv.push_str(&format!(
                "{},{},{method},{},{},{}\n",
                row.dim,
                row.max_counts,
                s.median,
                s.lower_quartile(),
                s.upper_quartile()
            ));
        }
    }
    setup.out.write("comparison.csv", csv.as_bytes())?;
    setup.out.write_json("comparison.json", &table)?;
    let failures: Vec<RunFailure> = table.rows.iter().flat_map(|r| r.failures.iter().cloned()).collect();
    finish(setup.out, &failures, log)
}

/// Files named on the command line, with directories expanded to the CSV
/// files they contain, in name order.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("cannot read directory {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            bail!("input {} does not exist", input.display());
        }
    }
    Ok(files)
}

fn read_curve(path: &Path) -> Result<Vec<f64>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let rows = read_trajectory_csv(file).with_context(|| format!("cannot read trajectory {}", path.display()))?;
    infidelity_curve_from_rows(&rows).with_context(|| format!("trajectory {}", path.display()))
}

fn cmd_summarize(inputs: &[PathBuf], out: &Path, log: &Log) -> Result<Outcome> {
    let files = expand_inputs(inputs)?;
    if files.is_empty() {
        bail!("no trajectory files to summarize");
    }
    let curves = files.iter().map(|f| read_curve(f)).collect::<Result<Vec<_>>>()?;
    let stats = summarize(&curves)?;
    log.debug(format!("summarized {} trajectories", curves.len()));
    let mut dir = OutputDir::create(out, "summarize")?;
    dir.write("summary.csv", &summary_csv(&stats)?)?;
    dir.write_json("summary.json", &stats)?;
    println!(
        "{} trajectories, {} iterations: median final fidelity {:.4}% +{:.4}/-{:.4}",
        stats.population,
        stats.iterations(),
        100.0 * stats.final_fidelity.median,
        100.0 * stats.final_fidelity.upper,
        100.0 * stats.final_fidelity.lower
    );
    finish(dir, &[], log)
}

fn read_series(path: &Path, label: String) -> Result<Series> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let curve = if text.starts_with("iteration,") {
        read_summary_csv(text.as_bytes()).with_context(|| format!("cannot read summary {}", path.display()))?
    } else {
        let curve = read_curve(path)?;
        SummaryCurve {
            median: curve.clone(),
            q25: curve.clone(),
            q75: curve,
        }
    };
    Ok(Series { label, curve })
}

fn cmd_plot(
    inputs: &[PathBuf],
    out: &Path,
    labels: &[String],
    title: &str,
    name: &str,
    log_scale: bool,
    log: &Log,
) -> Result<Outcome> {
    let files = expand_inputs(inputs)?;
    if files.is_empty() {
        bail!("nothing to plot: no input files");
    }
    if !labels.is_empty() && labels.len() != files.len() {
        bail!("{} labels for {} input files", labels.len(), files.len());
    }
    let series = files
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let label = labels.get(i).cloned().unwrap_or_else(|| {
                f.file_name().map_or_else(String::new, |s| s.to_string_lossy().trim_end_matches(".csv").to_string())
            });
            read_series(f, label)
        })
        .collect::<Result<Vec<_>>>()?;
    let svg = plot::render_svg(&series, title, log_scale)?;
    let table = plot::data_table(&series)?;
    let mut dir = OutputDir::create(out, "plot")?;
    let figure = dir.write(&format!("{name}.svg"), svg.as_bytes())?;
    dir.write(&format!("{name}.csv"), &table)?;
    log.info(format!("wrote {} ({} series)", figure.display(), series.len()));
    finish(dir, &[], log)
}

fn sibling_trajectory(spec_path: &Path) -> PathBuf {
    let name = spec_path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
    let stem = name.strip_suffix(".spec.json").unwrap_or(&name);
    spec_path.with_file_name(format!("{stem}.csv"))
}

fn first_difference(a: &[u8], b: &[u8]) -> String {
    let (a, b) = (String::from_utf8_lossy(a), String::from_utf8_lossy(b));
    let mut lines_a = a.lines();
    let mut lines_b = b.lines();
    let mut line = 1;
    loop {
        match (lines_a.next(), lines_b.next()) {
            (Some(x), Some(y)) if x == y => line += 1,
            (x, y) => {
                return format!(
                    "line {line}: stored {:?}, regenerated {:?}",
                    x.unwrap_or("<end>"),
                    y.unwrap_or("<end>")
                )
            }
        }
    }
}

fn cmd_replay(artifact: &Path, trajectory: Option<&Path>, log: &Log) -> Result<Outcome> {
    let text = fs::read_to_string(artifact).with_context(|| format!("cannot read {}", artifact.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", artifact.display()))?;
    if value.get("trajectory").is_some() {
        let stored: RunOutcome = serde_json::from_value(value)
            .with_context(|| format!("{} is not a run artifact", artifact.display()))?;
        let regenerated = stored.spec.execute()?;
        if regenerated != stored {
            let stored_csv = trajectory_csv(&stored.trajectory)?;
            let new_csv = trajectory_csv(&regenerated.trajectory)?;
            bail!("replay differs from {}: {}", artifact.display(), first_difference(&stored_csv, &new_csv));
        }
        println!("replay identical: {} iterations", regenerated.trajectory.records.len());
        return Ok(Outcome::Complete);
    }
    let spec: RunSpec = serde_json::from_value(value)
        .with_context(|| format!("{} is neither a run artifact nor a run spec", artifact.display()))?;
    let csv_path = trajectory.map_or_else(|| sibling_trajectory(artifact), Path::to_path_buf);
    let stored = fs::read(&csv_path).with_context(|| format!("cannot read trajectory {}", csv_path.display()))?;
    log.debug(format!("replaying {} against {}", artifact.display(), csv_path.display()));
    let regenerated = trajectory_csv(&spec.execute()?.trajectory)?;
    if regenerated != stored {
        bail!("replay differs from {}: {}", csv_path.display(), first_difference(&stored, &regenerated));
    }
    println!("replay identical: {} iterations", spec.iterations);
    Ok(Outcome::Complete)
}

