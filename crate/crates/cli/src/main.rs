//! Batch command-line front end for heavy-tail portfolio backtesting.

// `!(x > 0.0)` guards reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, StrategyKind};

/// Classified failures with documented exit codes: configuration problems
/// exit 2, data problems exit 3, anything else 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Other(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "eri",
    version,
    about = "Extreme-risk-index portfolio optimization, benchmarks, and backtests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Parser, Debug)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Strategy override; repeat for several.
    #[arg(long = "strategy", value_enum, ignore_case = true)]
    strategies: Vec<StrategyKind>,
    /// Rebalance cadence override in trading days.
    #[arg(long)]
    rebalance: Option<usize>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out_dir: self.out.clone(),
            strategies: self.strategies.clone(),
            rebalance_every: self.rebalance,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured strategies through the rolling-window backtest.
    Backtest(RunArgs),
    /// Emit tail-index series and per-stock estimates without backtesting.
    Estimate(RunArgs),
    /// Generate a synthetic price panel in the standard CSV schema.
    Synth(commands::SynthArgs),
    /// Rebuild statistics and comparison tables from saved ledgers.
    Report(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Backtest(args) => commands::cmd_backtest(&args.config, &args.overrides()),
        Command::Estimate(args) => commands::cmd_estimate(&args.config, &args.overrides()),
        Command::Synth(args) => commands::cmd_synth(&args),
        Command::Report(args) => commands::cmd_report(&args.config, &args.overrides()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
