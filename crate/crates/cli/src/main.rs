//! `pagerank`: generate test matrices, run the solvers, sweep benchmarks and
//! turn convergence traces into plot data.
//!
//! Exit status is 0 when every requested solve reached its target (for
//! `--gamma-sweep`, when at least one value of γ did), 1 when a solve ran
//! but stopped short, and 2 on usage or input errors.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pagerank_sparse::Method;

#[derive(Debug, Parser)]
#[command(
    name = "pagerank",
    version,
    about = "Sparse PageRank solvers on the unit simplex"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a test matrix P and write it in the DSM1 binary format.
    Generate(GenerateArgs),
    /// Solve one problem and emit a JSON report.
    Solve(SolveArgs),
    /// Run a grid of solves and write one CSV row per (problem, method).
    Bench(BenchArgs),
    /// Convert the trace of a JSON report into two-column text files.
    Plotdata(PlotdataArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Diagonal,
    Random,
    Webgraph,
}

/// How to interpret a matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixKind {
    /// Row-stochastic files are `P`, files shaped like `Pᵀ − I` are `A`.
    Auto,
    /// The stochastic matrix `P`.
    P,
    /// The operator `A = Pᵀ − I`.
    A,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of diagonals (odd).
    #[arg(long)]
    pub nd: Option<usize>,
    /// Nonzeros per row and column of the random family.
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random positive band weights instead of equal ones.
    #[arg(long)]
    pub random_weights: bool,
    /// SNAP edge list for the web-graph family.
    #[arg(long)]
    pub source: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Where to write P.
    #[arg(long)]
    out: PathBuf,
    /// Also write A = Pᵀ − I here.
    #[arg(long)]
    out_operator: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Read the matrix from a DSM1 file instead of generating it.
    #[arg(long, conflicts_with_all = ["family", "n", "nd", "s", "source", "random_weights"])]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MatrixKind::Auto)]
    pub matrix_kind: MatrixKind,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Negativity penalty weight (NL1).
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Run NL1 once per listed γ.
    #[arg(long, value_delimiter = ',', conflicts_with = "gamma")]
    pub gamma_sweep: Option<Vec<f64>>,
    /// NL1 step is (g_max − g_min) / this.
    #[arg(long, default_value_t = 8.0)]
    pub step_denominator: f64,
    /// Failure probability (GK).
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Step-size horizon N for GK; defaults to the value that guarantees
    /// `‖Ax̄‖_∞ ≤ ε` with probability `1 − σ`.
    #[arg(long)]
    pub horizon: Option<u64>,
    /// GK: draw A's strategy after B's update instead of simultaneously.
    #[arg(long)]
    pub alternating: bool,
    /// Iteration cap (rounds for GK).
    #[arg(long)]
    pub max_iters: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub start_vertex: usize,
    /// Honest recheck period in iterations; 0 disables.
    #[arg(long, default_value_t = 1024)]
    pub check_stride: u64,
    /// JSON report destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace CSV destination.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Nl1,
    Fw,
    Gk,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Nl1 => Method::Nl1,
            MethodArg::Fw => Method::Fw,
            MethodArg::Gk => Method::Gk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Suite {
    Diag,
    Random,
    Web,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Problem families to sweep; repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub suite: Vec<Suite>,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10_000, 100_000])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 11])]
    pub nd: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 11])]
    pub s: Vec<usize>,
    /// SNAP edge lists for the web suite.
    #[arg(long)]
    pub source: Vec<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Nl1, MethodArg::Fw])]
    pub method: Vec<MethodArg>,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Honest recheck period; off by default so timings cover the solver only.
    #[arg(long)]
    pub check_stride: Option<u64>,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotdataArgs {
    /// JSON report written by `solve`.
    #[arg(long)]
    pub report: PathBuf,
    /// Writes `<out>.iter.dat` (iteration, f) and `<out>.time.dat`
    /// (seconds, f).
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => {
            commands::generate(&args.problem, &args.out, args.out_operator.as_deref())
        }
        Command::Solve(args) => commands::solve(&args),
        Command::Bench(args) => commands::bench(&args),
        Command::Plotdata(args) => commands::plotdata(&args).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
