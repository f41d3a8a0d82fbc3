//! `gscp`: generate, label, train, solve and benchmark set cover instances.
//!
//! Progress goes to stderr; stdout carries only the path of the main output.
//! Exit codes: 0 success, 1 domain error, 2 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "gscp", version, about = "Learned problem reduction for weighted set cover")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate synthetic instances
    Generate(GenerateArgs),
    /// Solve instances exactly and write optimal-cover labels
    Label(LabelArgs),
    /// Train a scoring model on labeled instances
    Train(TrainArgs),
    /// Run the threshold-decrement pipeline on one instance
    Solve(SolveArgs),
    /// Run a comparison heuristic or the exact solver on one instance
    Baseline(BaselineArgs),
    /// Run experiment suites against the full-problem baseline
    Bench(BenchArgs),
    /// Write the node feature table of an instance
    Features(FeaturesArgs),
    /// Write an instance as an LP file
    ExportLp(ExportLpArgs),
    /// Convert between OR-Library and native instance files
    Convert(ConvertArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Label(_) => "label",
            Command::Train(_) => "train",
            Command::Solve(_) => "solve",
            Command::Baseline(_) => "baseline",
            Command::Bench(_) => "bench",
            Command::Features(_) => "features",
            Command::ExportLp(_) => "export-lp",
            Command::Convert(_) => "convert",
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Output directory
    #[arg(long, visible_alias = "report", default_value = ".")]
    out: PathBuf,
    /// Master seed
    #[arg(long, env = "GSCP_SEED", default_value_t = 0)]
    seed: u64,
    /// Flat key=value file of default flags; flags on the command line win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SizeOverride {
    /// Smallest number of rows (overrides the type's range)
    #[arg(long)]
    m_min: Option<usize>,
    /// Largest number of rows
    #[arg(long)]
    m_max: Option<usize>,
    /// Smallest number of columns
    #[arg(long)]
    n_min: Option<usize>,
    /// Largest number of columns
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Native,
    Orlib,
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    /// Instance type, 1 to 4
    #[arg(long = "type", value_parser = clap::value_parser!(u8).range(1..=4))]
    instance_type: u8,
    /// Number of instances
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// File format to write
    #[arg(long, value_enum, default_value_t = Format::Native)]
    format: Format,
    #[command(flatten)]
    size: SizeOverride,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct LabelArgs {
    /// Instance files or directories of instance files
    #[arg(long, required = true, num_args = 1..)]
    instances: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Penalty {
    Literal,
    Hinged,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    /// Train on these instance files or directories instead of generating
    #[arg(long, num_args = 1..)]
    instances: Vec<PathBuf>,
    /// Instance types to generate
    #[arg(long, value_delimiter = ',', default_values_t = [1u8, 2, 3, 4])]
    types: Vec<u8>,
    /// Generated instances per type
    #[arg(long, default_value_t = 75)]
    count_per_type: usize,
    #[command(flatten)]
    size: SizeOverride,
    /// Training epochs
    #[arg(long, default_value_t = 60)]
    epochs: usize,
    /// Share of examples held out for model selection
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    /// Hidden width
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    /// Number of GraphSAGE layers
    #[arg(long, default_value_t = 2)]
    layers: usize,
    /// Dropout rate during training
    #[arg(long, default_value_t = 0.4)]
    dropout: f64,
    /// Weight of the cross-entropy term
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Weight of the coverage penalty
    #[arg(long, default_value_t = 1e-4)]
    beta: f64,
    /// Penalty weight on uncovered rows
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Penalty weight on over-covered rows
    #[arg(long, default_value_t = 0.4)]
    omega: f64,
    /// Coverage penalty form
    #[arg(long, value_enum, default_value_t = Penalty::Literal)]
    penalty: Penalty,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct PipelineFlags {
    /// Initial percentile threshold
    #[arg(long, default_value_t = 90.0)]
    threshold: f64,
    /// Threshold decrement per round
    #[arg(long, default_value_t = 10.0)]
    decrement: f64,
    /// Per-solve time budget in milliseconds, 0 for none
    #[arg(long, default_value_t = 0)]
    timeout_ms: u64,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    /// Model file written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Instance file (native or OR-Library)
    #[arg(long)]
    instance: PathBuf,
    /// Stop once this objective is reached; without it the loop stops when
    /// two solver rounds agree
    #[arg(long)]
    target_obj: Option<String>,
    #[command(flatten)]
    pipeline: PipelineFlags,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Algo {
    Greedy,
    Lagrangian,
    /// Exact solve of a random k% column subset
    Random,
    /// Exact solve of the full instance
    Exact,
}

#[derive(Args, Debug, Serialize)]
struct BaselineArgs {
    /// Instance file (native or OR-Library)
    #[arg(long)]
    instance: PathBuf,
    /// Algorithm to run
    #[arg(long, value_enum)]
    algo: Algo,
    /// Percentage of columns kept by `--algo random`
    #[arg(long)]
    k: Option<f64>,
    /// Subgradient iterations for `--algo lagrangian`
    #[arg(long, default_value_t = 300)]
    iters: usize,
    /// Time budget in milliseconds for exact solves, 0 for none
    #[arg(long, default_value_t = 0)]
    timeout_ms: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Experiment {
    Bench,
    Trace,
    Sweep,
    RunCount,
    Density,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Stop {
    /// Target the full-problem baseline objective
    BaselineTarget,
    /// Stop once two solver rounds in a row give the same objective
    Stabilize,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    /// Model file written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Instance files or directories (not needed for `--experiment density`)
    #[arg(long, num_args = 1..)]
    instances: Vec<PathBuf>,
    /// Experiment suite to run
    #[arg(long, value_enum, default_value_t = Experiment::Bench)]
    experiment: Experiment,
    /// Parallel workers; results do not depend on it
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Stop rule of the pipeline runs
    #[arg(long, value_enum, default_value_t = Stop::BaselineTarget)]
    stop: Stop,
    /// Initial thresholds for the sweep and run-count experiments
    #[arg(long, value_delimiter = ',', default_values_t = [90.0, 70.0, 50.0, 30.0])]
    thresholds: Vec<f64>,
    /// Rows of density-sweep instances
    #[arg(long, default_value_t = 600)]
    density_m: usize,
    /// Columns of density-sweep instances
    #[arg(long, default_value_t = 1000)]
    density_n: usize,
    /// Instances per density bucket
    #[arg(long, default_value_t = 2)]
    density_count: usize,
    /// Density buckets as lo:hi pairs
    #[arg(long, value_delimiter = ',', value_parser = parse_bucket, default_value = "0.02:0.04,0.04:0.06,0.06:0.08,0.08:0.10")]
    density_buckets: Vec<(f64, f64)>,
    #[command(flatten)]
    pipeline: PipelineFlags,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct FeaturesArgs {
    /// Instance file (native or OR-Library)
    #[arg(long)]
    instance: PathBuf,
    /// Write features before min-max normalization
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct ExportLpArgs {
    /// Instance file (native or OR-Library)
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct ConvertArgs {
    /// Input format
    #[arg(long, value_enum)]
    from: Format,
    /// Output format
    #[arg(long, value_enum)]
    to: Format,
    /// Input file
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

fn parse_bucket(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("`{s}` is not lo:hi"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
    if !(0.0 < lo && lo <= hi && hi <= 1.0) {
        return Err(format!("`{s}` needs 0 < lo <= hi <= 1"));
    }
    Ok((lo, hi))
}

enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

fn parse() -> Result<Cli, clap::Error> {
    let args = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => return Err(Cli::command().error(clap::error::ErrorKind::ValueValidation, msg)),
    };
    let cmd = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let matches = cmd.try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match parse() {
        Ok(c) => c,
        // help and version exit 0, everything else 2
        Err(e) => e.exit(),
    };
    match commands::run(&cli.command) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
