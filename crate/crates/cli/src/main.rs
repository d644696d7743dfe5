//! `dap-layer`: batch front end of the toolkit.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 runtime error,
//! 4 fit stopped before converging (outputs are still written).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod calibrate;
mod config;
mod error;
mod fit;
mod ftir;
mod manifest;
mod simulate;

use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "dap-layer",
    version,
    about = "Donor-acceptor pair emission in thin diamond layers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo ensemble simulations.
    #[command(subcommand)]
    Simulate(simulate::SimulateCommand),
    /// Model fits writing fit.json and residuals.csv.
    #[command(subcommand)]
    Fit(fit::FitCommand),
    /// FTIR analysis.
    #[command(subcommand)]
    Ftir(ftir::FtirCommand),
    /// Calibrate the rate and window parameters against the peak anchors.
    Calibrate(calibrate::CalibrateArgs),
}

/// Sizes the global pool from `DAP_LAYER_THREADS` (0 or unset: automatic).
fn configure_threads() -> CliResult<()> {
    let Ok(text) = std::env::var("DAP_LAYER_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("DAP_LAYER_THREADS={text:?} is not a count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Simulate(c) => simulate::run(c),
        Command::Fit(c) => fit::run(c),
        Command::Ftir(c) => ftir::run(c),
        Command::Calibrate(a) => calibrate::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
