//! `tailmix` command-line front end.
//!
//! Every subcommand writes machine-readable JSON reports (CSV for tabular
//! plot data) that embed the manifest needed to reproduce them.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tailmix::ExpMode;

#[derive(Parser)]
#[command(name = "tailmix", version, about = "Heavy-tailed mixture models for binned flow-arrival counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bin flow start times into per-window count series.
    Bin(commands::bin::BinArgs),
    /// Fit P, EP and EEP to series and select a model.
    FitSelect(commands::fit_select::FitSelectArgs),
    /// Label each bin as exponential-like or tail.
    Classify(commands::classify::ClassifyArgs),
    /// Draw a synthetic series from a model file.
    Simulate(commands::simulate::SimulateArgs),
    /// Run a synthetic validation study from a preset or plan file.
    Validate(commands::validate::ValidateArgs),
}

/// Options shared by the commands that fit models.
#[derive(Args, Debug, Clone)]
pub struct FitOptions {
    #[arg(long, value_enum, default_value = "discrete")]
    pub exp_mode: ExpModeArg,
    /// Random restarts per fit.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    /// Seed for restarts and sampling.
    #[arg(long, env = "TAILMIX_SEED")]
    pub seed: Option<u64>,
    /// Natural-log Bayes factor a larger model must exceed to be chosen.
    #[arg(long, default_value_t = 10.0)]
    pub threshold: f64,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum ExpModeArg {
    Discrete,
    PaperLiteral,
}

impl From<ExpModeArg> for ExpMode {
    fn from(m: ExpModeArg) -> Self {
        match m {
            ExpModeArg::Discrete => ExpMode::Discrete,
            ExpModeArg::PaperLiteral => ExpMode::PaperLiteral,
        }
    }
}

pub fn ensure_dir(dir: &PathBuf) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", dir.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bin(a) => commands::bin::run(a),
        Command::FitSelect(a) => commands::fit_select::run(a),
        Command::Classify(a) => commands::classify::run(a),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Validate(a) => commands::validate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
