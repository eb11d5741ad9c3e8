//! `factorial-iv`: IV analysis of 2×2 factorial designs with endogenous takeup.

mod args;
mod commands;
mod failure;
mod input;
mod report;

use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use args::Common;
use commands::{analyze, bounds, sensitivity, simulate, verify};
use failure::{exit_code, Failure};

#[derive(Parser, Debug)]
#[command(
    name = "factorial-iv",
    version,
    about = "IV estimands and bounds for 2×2 factorial designs with coordinated takeup"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Descriptive, takeup and conditional-mean tables and the saturated IV regression.
    Analyze(analyze::AnalyzeArgs),
    /// Bounds on the joint effect and the LAIE of complier pairs.
    Bounds(bounds::BoundsArgs),
    /// λ-sensitivity models, level-set grids and zero contours.
    Sensitivity(sensitivity::SensitivityArgs),
    /// Sample unit records from a population spec.
    Simulate(simulate::SimulateArgs),
    /// Check theorem identities on exact populations.
    Verify(verify::VerifyArgs),
}

fn run(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    let report = match &cli.command {
        Command::Analyze(a) => analyze::run(a, common)?,
        Command::Bounds(a) => bounds::run(a, common)?,
        Command::Sensitivity(a) => sensitivity::run(a, common)?,
        Command::Verify(a) => verify::run(a, common)?,
        Command::Simulate(a) => {
            let (csv, report) = simulate::run(a, common)?;
            match report {
                Some(r) => r.emit(common.format, common.out.as_deref())?,
                None => std::io::stdout().lock().write_all(csv.as_bytes())?,
            }
            return Ok(());
        }
    };
    report.emit(common.format, common.out.as_deref())?;
    match report.failure {
        Some(msg) => Err(Failure::Verification(msg).into()),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
