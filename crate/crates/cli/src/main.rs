mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Self-guided tomography simulations: single runs, population batches,
/// error budgets, comparison with maximum-likelihood tomography, and plots.
#[derive(Parser, Debug)]
#[command(name = "sgt", version, about)]
pub struct Cli {
    /// More progress output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// TOML config file.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Base seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One SGT run from the `[run]` section.
    Run(ConfigArgs),
    /// Every (dimension, count level) cell of the `[plan]` section.
    Batch {
        #[command(flatten)]
        args: ConfigArgs,
        /// Write only per-condition summaries, not per-run trajectories.
        #[arg(long)]
        summaries_only: bool,
    },
    /// Error-budget sweep: each error source removed or amplified.
    Budget(ConfigArgs),
    /// SGT against maximum-likelihood tomography on the same states.
    Compare(ConfigArgs),
    /// Median and quartiles of trajectory files.
    Summarize {
        /// Trajectory CSV files, or directories containing them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// SVG figure and data table from summary or trajectory files.
    Plot {
        /// Summary or trajectory CSV files, or directories containing them.
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Series labels, in input order; defaults to file names.
        #[arg(long = "label")]
        labels: Vec<String>,
        #[arg(long, default_value = "median infidelity")]
        title: String,
        /// Base name of the figure and table files.
        #[arg(long, default_value = "figure")]
        name: String,
        /// Linear infidelity axis instead of logarithmic.
        #[arg(long)]
        linear: bool,
    },
    /// Regenerate a stored run from its spec and check it is bit-identical.
    Replay {
        /// `run.json`, or a `*.spec.json` next to its trajectory CSV.
        artifact: PathBuf,
        /// Trajectory to compare against; defaults to the CSV next to the `.spec.json` file.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = commands::Log::new(cli.verbose, cli.quiet);
    match commands::dispatch(cli.command, &log) {
        Ok(commands::Outcome::Complete) => ExitCode::SUCCESS,
        Ok(commands::Outcome::PartialFailure(n)) => {
            eprintln!("error: {n} runs failed; see failures.json");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
