//! `fairflip`: measure group bias in a labeled CSV, flip labels to reach
//! demographic parity while training a classifier, sweep the parity
//! tolerance, explain the flips with a small tree and evaluate models.
//!
//! Exit codes: 0 success, 2 usage or schema error, 3 data or solver error,
//! 4 solver stopped at an iteration limit (outputs are still written).

mod commands;
mod output;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use schema::SchemaArgs;

#[derive(Parser, Debug)]
#[command(name = "fairflip", version, about = "Label flipping for demographic parity")]
struct Cli {
    /// Progress messages on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Report the positive-rate gap between the two groups.
    Measure(MeasureArgs),
    /// Flip labels to a parity target and train the chosen model.
    Debias(DebiasArgs),
    /// Run debias over a grid of epsilon values.
    Tradeoff(TradeoffArgs),
    /// Fit a three-class tree that explains a flip report.
    Explain(ExplainArgs),
    /// Score a saved model on a labeled CSV.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic biased dataset.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Serialize)]
struct MeasureArgs {
    #[command(flatten)]
    schema: SchemaArgs,
    /// Also write bias.json and config.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    Logistic,
    Svm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Auto,
    Oa,
    Alternating,
    #[value(name = "exact_enum", alias = "exact-enum")]
    ExactEnum,
}

#[derive(Args, Debug, Serialize)]
struct SolverArgs {
    /// Merit tolerance in standard deviations; omit for no merit constraint.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum, default_value = "logistic")]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    /// SVM regularization constant.
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,
    /// Ridge penalty for logistic fits.
    #[arg(long, default_value_t = 1e-6)]
    lambda: f64,
    /// Allow flips in either direction within each group.
    #[arg(long)]
    no_directional: bool,
    /// Random restarts of the alternating search.
    #[arg(long, default_value_t = 4)]
    restarts: usize,
}

#[derive(Args, Debug, Serialize)]
struct DebiasArgs {
    #[command(flatten)]
    schema: SchemaArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Target parity gap of the flipped labels.
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug, Serialize)]
struct TradeoffArgs {
    #[command(flatten)]
    schema: SchemaArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Epsilon values, comma separated; defaults to 10 log-spaced points up to alpha.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug, Serialize)]
struct ExplainArgs {
    #[command(flatten)]
    schema: SchemaArgs,
    /// Flip report written by `debias` (flips.csv).
    #[arg(long)]
    flips: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 5)]
    min_leaf: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Share of rows held out for the reported accuracy.
    #[arg(long, default_value_t = 0.3)]
    test_fraction: f64,
    /// Fixed depth instead of cross-validation.
    #[arg(long, conflicts_with = "optimal")]
    depth: Option<usize>,
    /// Exhaustive depth-2 tree minimizing training errors.
    #[arg(long)]
    optimal: bool,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    #[command(flatten)]
    schema: SchemaArgs,
    /// Model JSON written by `debias`.
    #[arg(long)]
    model: PathBuf,
    /// Also write metrics.json and config.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Number of features.
    #[arg(long, default_value_t = 3)]
    p: usize,
    /// Target gap between the groups' positive rates.
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    /// Share of rows in the advantaged group.
    #[arg(long, default_value_t = 0.5)]
    group_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = cli.verbose;
    let result = match &cli.command {
        Command::Measure(a) => commands::measure(a, &cli.command),
        Command::Debias(a) => commands::debias(a, &cli.command, verbose),
        Command::Tradeoff(a) => commands::tradeoff(a, &cli.command, verbose),
        Command::Explain(a) => commands::explain(a, &cli.command, verbose),
        Command::Evaluate(a) => commands::evaluate(a, &cli.command),
        Command::Synth(a) => commands::synth(a, &cli.command),
    };
    match result {
        Ok(()) => ExitCode::from(output::EXIT_OK),
        Err(e) => {
            eprintln!("fairflip: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
