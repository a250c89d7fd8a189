use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "qcd",
    version,
    about = "Detect bad changes while ignoring confusing ones: scenario classification, delay bounds and Monte Carlo replication",
    after_help = "Density specs use the form gaussian:<mean>:<variance>, e.g. gaussian:0.5:1.\n\
                  Exit codes: 0 success, 2 usage or validation error, 3 I/O error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a (f0, fC, fB) triple into scenario 1, 2 or 3 and print a JSON report.
    Classify(ModelArgs),
    /// Print asymptotic delay bounds, one CSV row per gamma.
    Bounds(BoundsArgs),
    /// Run the simulation study for one preset scenario or all three.
    Replicate(ReplicateArgs),
    /// Run a fully custom simulation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Pre-change density f0.
    pub f0: String,
    /// Confusing-change density fC.
    pub fc: String,
    /// Bad-change density fB.
    pub fb: String,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// False-alarm level gamma > 1; repeat or comma-separate. Accepts `e^<x>`.
    #[arg(long = "gamma", value_delimiter = ',', required = true)]
    pub gamma: Vec<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Options shared by `replicate` and `simulate`. Unset options fall back to
/// the config file, then to the documented defaults.
#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    /// JSON config file; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trials per (detector, threshold, regime) cell [default: 60].
    #[arg(long)]
    pub trials: Option<u64>,
    /// Experiment seed [default: $QCD_SEED, else 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threshold grid, b0 = bC = b [default: 1.5,2,2.5,3,3.5,4].
    #[arg(long = "b", value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
    /// Detectors to run [default: cusum-w,cusum-lambda,s-cusum,j-cusum].
    #[arg(long, value_delimiter = ',')]
    pub detectors: Option<Vec<String>>,
    /// Also probe the confusing change at nu in {1,5,10,25,50} and keep the minimum [default: off].
    #[arg(long)]
    pub nu_grid: bool,
    /// Horizon for run-length regimes [default: ceil(50 e^b)].
    #[arg(long)]
    pub horizon_rl: Option<u64>,
    /// Horizon for the delay regime [default: ceil(200 b / min KL)].
    #[arg(long)]
    pub horizon_delay: Option<u64>,
    /// Record CSV path [default: records_s<N>.csv for replicate, records.csv for simulate].
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Summary CSV path [default: summary_s<N>.csv for replicate, summary.csv for simulate].
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    /// Scenario: 1, 2, 3 or all.
    pub scenario: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Pre-change density f0 (or `f0` in the config file).
    #[arg(long)]
    pub f0: Option<String>,
    /// Confusing-change density fC (or `fc` in the config file).
    #[arg(long)]
    pub fc: Option<String>,
    /// Bad-change density fB (or `fb` in the config file).
    #[arg(long)]
    pub fb: Option<String>,
    /// Label written to the scenario column [default: custom].
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
}
