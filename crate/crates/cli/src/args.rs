//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "splitscore",
    version,
    about = "Split-measurement Bayesian model scoring, selection, and OOD testing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Split a measurement into two conditionally independent halves.
    Split(SplitArgs),
    /// Convergence table of the sampling predictive-density estimator
    /// against the closed form, for the white-noise conjugate model.
    OracleCheck(OracleCheckArgs),
    /// Model-discrimination curves over a grid of candidate prior widths.
    Discriminate(DiscriminateArgs),
    /// Score one model on one measurement with a chosen rule.
    Score(ScoreArgs),
    /// Rank candidate blur kernels by cross-predictive score.
    SelectKernel(SelectKernelArgs),
    /// Calibrate a percentile threshold on reference measurements and test
    /// labeled measurements against it.
    OodTest(OodTestArgs),
}

#[derive(Args)]
pub struct SplitArgs {
    /// Input measurement (.ft64 or .pgm)
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for y_plus.ft64, y_minus.ft64, w.ft64
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Measurement noise standard deviation
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Splitting parameter in (0, 1)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = hardware parallelism)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args)]
pub struct OracleCheckArgs {
    /// Model dimensions, comma-separated (e.g. 10,100)
    #[arg(long, default_value = "10")]
    pub m: String,
    /// Splitting parameters, comma-separated
    #[arg(long, default_value = "0.5")]
    pub alpha: String,
    /// Largest Monte Carlo sample count
    #[arg(long, default_value_t = 50_000)]
    pub n_max: usize,
    /// Splits to average the error over
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub sigma_x: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DiscriminateArgs {
    /// Model dimension
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    /// Noise realizations per curve point
    #[arg(long, default_value_t = 250)]
    pub k: usize,
    /// Splitting parameters, comma-separated
    #[arg(long, default_value = "0.5")]
    pub alpha: String,
    #[arg(long, default_value_t = 0.5)]
    pub grid_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub grid_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    /// Independent measurement draws averaged per curve
    #[arg(long, default_value_t = 1)]
    pub y_draws: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub sigma_x: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Input measurement (.ft64 or .pgm)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scoring rule: phi1, phi2, or phi3
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Summary CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Structured per-run report path
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-realization partials CSV, flushed as realizations complete
    #[arg(long)]
    pub partials: Option<PathBuf>,
    /// Reuse completed realizations from an existing partials file
    #[arg(long)]
    pub resume: bool,
}

#[derive(Args)]
pub struct SelectKernelArgs {
    /// Measurement file(s), comma-separated; several enable few-shot pooling
    #[arg(long)]
    pub input: String,
    /// Candidate kernels, e.g. "gaussian:2,gaussian:2.5,uniform:3,moffat:0.5:1"
    #[arg(long)]
    pub candidates: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct OodTestArgs {
    /// Reference (calibration) measurement files, comma-separated
    #[arg(long)]
    pub reference: String,
    /// In-distribution test measurement files, comma-separated
    #[arg(long)]
    pub id: String,
    /// Out-of-distribution test measurement files, comma-separated
    #[arg(long)]
    pub ood: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Test statistic: phi1 or phi2
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Rates CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-item decisions CSV path
    #[arg(long)]
    pub items: Option<PathBuf>,
}
