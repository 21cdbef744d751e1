//! Batch driver for the qttagg library.

mod bench;
mod config;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{load_model, read_json, RunConfig};

#[derive(Parser)]
#[command(
    name = "qttagg",
    version,
    about = "Distributions and risk of weighted sums of random variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and print its summary.
    Validate { model: PathBuf },
    /// Compute the CDF, optional density, risk metrics and diagnostics.
    Run { config: PathBuf },
    /// Sweep parameters and write one CSV row per run.
    Bench { sweep: PathBuf },
    /// Compute VaR and ES only.
    Risk { config: PathBuf },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(qttagg::Error),
}

impl From<qttagg::Error> for CliError {
    fn from(e: qttagg::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    /// 2 validation, 3 resource limit, 4 numeric failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(qttagg::Error::InvalidArgument(_)) => 2,
            CliError::Core(qttagg::Error::ResourceLimit { .. }) => 3,
            CliError::Core(
                qttagg::Error::NumericFailure(_) | qttagg::Error::ConvergenceFailure { .. },
            ) => 4,
        }
    }
}

fn validate(path: &Path) -> Result<(), CliError> {
    let model = load_model(path)?;
    let (mean, var) = model.mean_variance()?;
    let summary = serde_json::json!({
        "components": model.len(),
        "discrete": model.is_discrete(),
        "mean": mean,
        "variance": var,
    });
    println!("{summary}");
    Ok(())
}

fn run_config(path: &Path, full: bool) -> Result<(), CliError> {
    let config: RunConfig = read_json(path)?;
    let resolved = config.resolve(path)?;
    run::execute(&resolved, full)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { model } => validate(model),
        Command::Run { config } => run_config(config, true),
        Command::Bench { sweep } => bench::cmd_bench(sweep),
        Command::Risk { config } => run_config(config, false),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qttagg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
