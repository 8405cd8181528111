//! `dilastab <verify|simulate|estimate> --config <path> [--workers N]
//! [--seed S] [--out DIR] [--validate]`
//!
//! Exit codes: 0 pass, 1 scientific failure, 2 usage or configuration error.

mod builtins;
mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use spec::{ExperimentSpec, Overrides};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Science(String),
}

impl From<dilastab::Error> for CliError {
    fn from(e: dilastab::Error) -> Self {
        use dilastab::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::InvalidQuery(_)
            | E::TruncationTooSmall { .. }
            | E::Io(_)
            | E::Json(_) => CliError::Config(e.to_string()),
            E::NonConvergence { .. }
            | E::Divergence(_)
            | E::DegenerateDesign(_)
            | E::SearchFailed(_) => CliError::Science(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Check scaling laws against exponent oracles.
    Verify,
    /// Simulate an ensemble by truncated compound-Poisson integration.
    Simulate,
    /// Estimate scaling exponents.
    Estimate,
}

#[derive(Debug, Parser)]
#[command(
    name = "dilastab",
    version,
    about = "Scaling-law verification and simulation for dilatively stable processes"
)]
struct Cli {
    command: Command,
    /// JSON experiment file; `{"experiment": "<name>"}` loads a builtin.
    #[arg(long)]
    config: PathBuf,
    /// Thread cap; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Base seed for the per-path random streams (default 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// With `simulate`: also test the ensemble against the oracles.
    #[arg(long)]
    validate: bool,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let spec = ExperimentSpec::load(
        &cli.config,
        Overrides {
            seed: cli.seed,
            workers: cli.workers,
            out: cli.out.clone(),
        },
    )?;
    let go = || match cli.command {
        Command::Verify => commands::verify(&spec),
        Command::Simulate => commands::simulate(&spec, cli.validate),
        Command::Estimate => commands::estimate(&spec),
    };
    match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?
            .install(go),
        None => go(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("dilastab: {:?} failed", cli.command);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("dilastab: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                CliError::Science(_) => 1,
            })
        }
    }
}
