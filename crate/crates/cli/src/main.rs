//! `qpo`: compile portfolio problems to quadratic penalty models, sample
//! them, and analyze the results.
//!
//! Exit codes: 0 success (a feasible sample exists where applicable),
//! 2 usage or configuration error, 3 the run finished but found no
//! feasible sample, 1 other runtime failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigArgs;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or problem data; exits 2.
    Usage(String),
    /// The run completed without a feasible sample; exits 3.
    Infeasible,
    /// Everything else; exits 1.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Infeasible => write!(f, "no feasible sample found"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "qpo", version, about = "Portfolio optimization via quadratic binary models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    /// Bits per asset (K).
    #[value(alias = "k")]
    Bits,
    Assets,
    Reads,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepAxis::Bits => write!(f, "bits"),
            SweepAxis::Assets => write!(f, "assets"),
            SweepAxis::Reads => write!(f, "reads"),
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Which knob to sweep.
    #[arg(long)]
    pub axis: SweepAxis,
    /// Comma-separated values for the axis.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<usize>,
    /// Factor count for generated instances (assets axis).
    #[arg(long, default_value_t = 3)]
    pub factors: usize,
}

#[derive(Debug, clap::Args)]
pub struct ErrorStatsArgs {
    /// Granularity in (0, 0.5].
    #[arg(long)]
    pub p: Option<f64>,
    /// Derive the granularity from a bit count, p = 1/2^K.
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// record.json produced by `solve`.
    #[arg(long)]
    pub record: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Build the bit layout and export the compiled quadratic model.
    Compile(ConfigArgs),
    /// Run a solver and write sample and analysis files.
    Solve(ConfigArgs),
    /// Run one experiment per axis value plus a combined summary.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Print closed-form vs Monte Carlo rounding-error statistics.
    ErrorStats(ErrorStatsArgs),
    /// Summarize a saved experiment record.
    Report(ReportArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compile(args) => commands::cmd_compile(&args.resolve()?),
        Command::Solve(args) => commands::cmd_solve(&args.resolve()?),
        Command::Sweep { config, sweep } => commands::cmd_sweep(&config.resolve()?, &sweep),
        Command::ErrorStats(args) => commands::cmd_error_stats(&args),
        Command::Report(args) => commands::cmd_report(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Infeasible => ExitCode::from(3),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
