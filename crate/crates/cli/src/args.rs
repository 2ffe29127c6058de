use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ssn",
    version,
    about = "Semi-smooth Newton solver for x⁺ + Tx = b and nonnegative QPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a pwls or qp problem file (cone files are solved as their QP).
    Solve(SolveArgs),
    /// Project z onto the simplicial cone {Av : v ≥ 0}.
    Project(ProjectArgs),
    /// Iteration totals per dimension and tolerance (β in (0, 1/2)).
    BenchDim(BenchDimArgs),
    /// Sensitivity of the iteration count to the starting point.
    BenchStarts(BenchStartsArgs),
    /// Solved counts and mean iterations for large ‖Q − I‖.
    BenchBeta(BenchBetaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Formulation {
    Pwls,
    Qp,
}

#[derive(Debug, Clone, Args)]
pub struct IterationArgs {
    /// Starting point: `zero`, `random`, or a JSON array file.
    #[arg(long, default_value = "zero")]
    pub x0: String,
    /// Seed for `--x0 random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Residual tolerance: stop when ‖F(x)‖∞ ≤ tol_f (1 + ‖b‖∞).
    #[arg(long, default_value_t = 1e-10)]
    pub tol_f: f64,
    /// Known solution (JSON array); switches to the ‖u − x‖ < TolX (1 + ‖u‖) rule.
    #[arg(long, requires = "tolx")]
    pub reference: Option<PathBuf>,
    #[arg(long, requires = "reference")]
    pub tolx: Option<f64>,
    /// Dump every iterate as JSON.
    #[arg(long)]
    pub trace: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    pub problem: PathBuf,
    /// Iterate on this form; defaults to the file's own kind.
    #[arg(long, value_enum)]
    pub formulation: Option<Formulation>,
    #[command(flatten)]
    pub iter: IterationArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    pub problem: PathBuf,
    #[command(flatten)]
    pub iter: IterationArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchCommon {
    /// Stopping tolerance (repeatable); default 1e-6, 1e-8, 1e-10.
    #[arg(long = "tolx")]
    pub tolx: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Timed repetitions per solve; the median is reported.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BenchDimArgs {
    /// Dimension (repeatable); default 50, 100, 200.
    #[arg(long = "n")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[command(flatten)]
    pub common: BenchCommon,
}

#[derive(Debug, Clone, Args)]
pub struct BenchStartsArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Number of problems.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Random starting points per problem.
    #[arg(long, default_value_t = 50)]
    pub starts: usize,
    #[command(flatten)]
    pub common: BenchCommon,
}

#[derive(Debug, Clone, Args)]
pub struct BenchBetaArgs {
    /// Lower end of a β range (repeatable, paired with --beta-high).
    #[arg(long = "beta-low")]
    pub beta_low: Vec<f64>,
    #[arg(long = "beta-high")]
    pub beta_high: Vec<f64>,
    /// Use no β range at all (header-only output).
    #[arg(long, conflicts_with_all = ["beta_low", "beta_high"])]
    pub no_ranges: bool,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[command(flatten)]
    pub common: BenchCommon,
}
