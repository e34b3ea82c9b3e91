//! Command-line front end for `sgdlab`: runs experiments from config files,
//! checks step-size schedules, searches for assumption-violation witnesses,
//! compares gradient flow with gradient descent on the limit-cycle field and
//! validates the problem oracles.
//!
//! Exit codes: `0` success (including "no witness exists"), `1` usage or
//! configuration error, `2` runtime numerical failure.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sgdlab::diagnostics::Assumption;
use thiserror::Error;

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

/// Comma-separated floats, e.g. `1.5,0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Floats(pub Vec<f64>);

impl FromStr for Floats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        config::parse_list(s).map(Floats)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sgdlab",
    version,
    about = "SGD test bed: problems, schedules, trajectories and diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the problem catalog.
    List,
    /// Run SGD from a config file and write trajectory CSVs plus a summary.
    Run(RunArgs),
    /// Check a step-size schedule against the admissibility properties.
    CheckSchedule(ScheduleArgs),
    /// Search for a point violating a classical assumption.
    Witness(WitnessArgs),
    /// Compare gradient flow and gradient descent on the limit-cycle field.
    LimitCycle(LimitCycleArgs),
    /// Check gradients, unbiasedness and moments of the problem oracles.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file with `section.key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set run.seed=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the effective config and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Leading coefficient of the power family.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// One exponent, or one per coordinate.
    #[arg(long, default_value = "1")]
    pub beta: Floats,
    /// Dimension (defaults to the number of exponents).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Custom matrix sequence file; overrides `--c` and `--beta`.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Hölder exponent of the gradient.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Terms in the partial sums of custom sequences.
    #[arg(long, default_value_t = sgdlab::schedules::DEFAULT_HORIZON)]
    pub horizon: u64,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub problem: String,
    /// global-lipschitz, L0L1-smooth, bounded-variance or expected-smoothness.
    #[arg(long)]
    pub assumption: Assumption,
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    #[arg(long = "L0", default_value_t = 1.0)]
    pub l0: f64,
    #[arg(long = "L1", default_value_t = 1.0)]
    pub l1: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    pub b: f64,
    #[arg(long = "C0", default_value_t = 1.0)]
    pub c0: f64,
    #[arg(long = "C1", default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long = "C2", default_value_t = 1.0)]
    pub c2: f64,
    /// Optimum of `linreg`.
    #[arg(long, default_value_t = 1.0)]
    pub theta_star: f64,
}

#[derive(Debug, Args)]
pub struct LimitCycleArgs {
    #[arg(long, default_value = "1.5,0")]
    pub theta0: Floats,
    /// Flow horizon T.
    #[arg(long, default_value_t = 200.0)]
    pub horizon: f64,
    /// RK4 step.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// Gradient descent steps K.
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    /// Keep every n-th GD iterate in the CSV.
    #[arg(long, default_value_t = 1000)]
    pub stride: u64,
    /// Keep every n-th flow grid point in the CSV.
    #[arg(long, default_value_t = 100)]
    pub flow_stride: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Problem id, or `all`.
    #[arg(long, default_value = "all")]
    pub problem: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo sample size.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    /// Random points for the gradient and unbiasedness checks.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Monte Carlo point (defaults to 0.5 in every coordinate).
    #[arg(long)]
    pub theta: Option<Floats>,
}

/// Parse `args` (including the program name) and execute; returns the exit
/// code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match commands::dispatch(&cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
