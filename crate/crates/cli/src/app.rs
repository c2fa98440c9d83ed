//! Argument parsing and dispatch for the `qnt` binary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qnt_core::FisherMode;

use crate::commands::{self, Table};
use crate::config::{parse_toggle, ConfigFile, Experiment, Overrides, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qnt", version, about = "Werner-link tomography: Fisher bounds, sweeps and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisher information and bound of one link under each scheme.
    SingleLink(CommonArgs),
    /// LZM/JBM bound ratio and their crossover.
    Ratio(CommonArgs),
    /// Bounds of the four star-network strategies.
    Star(CommonArgs),
    /// Check closed forms against the density-matrix simulator.
    Validate(ValidateArgs),
    /// Monte-Carlo estimator variance against the Cramér–Rao bound.
    Benchmark(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment manifest (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<FisherMode>,
    #[arg(long, value_parser = parse_toggle)]
    pub normalize: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<FisherMode, String> {
    s.parse()
}

fn resolve(args: &CommonArgs, experiment: Experiment) -> Result<SweepConfig, String> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path).map_err(|e| e.to_string())?,
        None => ConfigFile::default(),
    };
    let overrides = Overrides {
        mode: args.mode,
        normalize: args.normalize,
        seed: args.seed,
        output: args.out.clone(),
    };
    SweepConfig::resolve(&file, experiment, &overrides).map_err(|e| e.to_string())
}

fn emit(table: &Table, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, table.to_csv()).map_err(|e| format!("{}: {e}", path.display()))?,
        None => {
            let stdout = std::io::stdout();
            table.write_csv(stdout.lock()).map_err(|e| e.to_string())?;
        }
    }
    let mut stderr = std::io::stderr().lock();
    for note in &table.notes {
        let _ = writeln!(stderr, "{note}");
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate(args) => {
            let (table, ok) = commands::cmd_validate();
            match emit(&table, args.out.as_ref()) {
                Ok(()) if ok => Ok(()),
                Ok(()) => return EXIT_VALIDATION,
                Err(e) => Err(e),
            }
        }
        Command::SingleLink(args) => resolve(&args, Experiment::SingleLink)
            .and_then(|c| emit(&commands::cmd_single_link(&c), c.output.as_ref())),
        Command::Ratio(args) => {
            resolve(&args, Experiment::Ratio).and_then(|c| emit(&commands::cmd_ratio(&c), c.output.as_ref()))
        }
        Command::Star(args) => resolve(&args, Experiment::Star).and_then(|c| {
            let table = commands::cmd_star(&c).map_err(|e| e.to_string())?;
            emit(&table, c.output.as_ref())
        }),
        Command::Benchmark(args) => resolve(&args, Experiment::Benchmark).and_then(|c| {
            let table = commands::cmd_benchmark(&c).map_err(|e| e.to_string())?;
            emit(&table, c.output.as_ref())
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
