use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod model_file;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] adaspline::Error),
    #[error("{0}")]
    Usage(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use adaspline::Error as E;
        match self {
            CliError::Core(E::RankDeficient { .. } | E::NotConverged { .. }) => 3,
            CliError::Core(E::Io(_) | E::Parse { .. }) | CliError::Format(_) | CliError::Io(_) => 4,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "adaspline",
    version,
    about = "Adaptive tensor-product B-spline fitting for scattered data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic point cloud.
    Synth(SynthArgs),
    /// Fit a spline model to a CSV point cloud.
    Fit(FitArgs),
    /// Evaluate a model on a grid or at given points.
    Eval(EvalArgs),
    /// Compare a model with reference data.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Kind {
    Polysinc,
    Annulus,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 40_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Thinned disk `cx,cy,radius,sparsity`; may be repeated (polysinc only).
    #[arg(long = "void", value_name = "CX,CY,R,SPARSITY", value_parser = parse_void, allow_hyphen_values = true)]
    pub voids: Vec<[f64; 4]>,
    /// Add the four standard voids with this sparsity (polysinc only).
    #[arg(long, value_name = "SPARSITY")]
    pub default_voids: Option<f64>,
    /// Hole radius as a fraction of the half-width (annulus only).
    #[arg(long)]
    pub hole_radius: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Solver {
    Auto,
    Direct,
    Cg,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Condition {
    Estimate,
    Exact,
    None,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Control points per dimension, e.g. `60,60`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ctrl: Vec<usize>,
    /// Regularization threshold s*; 0 gives plain least squares.
    #[arg(long)]
    pub threshold: f64,
    /// Penalized derivative orders, e.g. `2` or `1,2`.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub orders: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Solver::Auto)]
    pub solver: Solver,
    #[arg(long, value_enum, default_value_t = Condition::Estimate)]
    pub condition: Condition,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the per-control-point λ field as CSV.
    #[arg(long)]
    pub lambda_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        required_unless_present = "points",
        conflicts_with = "points"
    )]
    pub grid: Option<Vec<usize>>,
    /// CSV whose header starts with `x1..xd`; further columns are ignored.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `polysinc` or the path of a reference CSV.
    #[arg(long)]
    pub reference: String,
    /// Region `x1min,x1max,x2min,x2max,...`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub roi: Option<Vec<f64>>,
    /// Samples per dimension for analytic references.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the λ field; needs --input and --threshold to rebuild the system.
    #[arg(long, requires_all = ["input", "threshold"])]
    pub lambda_out: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub orders: Vec<usize>,
}

fn parse_void(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|p: Vec<f64>| format!("expected 4 numbers cx,cy,r,sparsity, got {}", p.len()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
