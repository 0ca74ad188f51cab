//! Command-line driver for `hvbell-core`.
//!
//! Exit codes: `0` clean, `1` malformed input, `2` a proven bound failed or
//! an internal invariant was breached, `3` a flagged finding (a classical
//! violation, or a counterexample to the stated stochastic bound).

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod records;
pub mod report;

use config::Numeric;

#[derive(Debug, Parser)]
#[command(name = "hvbell", version, about = "Hidden-variable Bell-bound simulator and checker")]
pub struct Cli {
    /// Worker threads for parallel sections. Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate runs from a config; write records and a report.
    Simulate { config: PathBuf },
    /// Statistics and the classical check on record files.
    Analyze {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "rational")]
        numeric: Numeric,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate every applicable bound on an instance file or a report.
    Check {
        instance: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Maximize the classical violation, or hunt for counterexamples.
    Search { config: PathBuf },
    /// Median deviation between independent runs as N grows.
    Converge { config: PathBuf },
    /// Singlet-state reference correlations and the deviation they require.
    Singlet {
        /// Three analyzer angles in radians: `a,b,c`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Option<Vec<f64>>,
        /// Grid step in degrees for a scan over the A and C angles.
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Simulate { config } => commands::simulate(config),
        Command::Analyze {
            records,
            numeric,
            output,
        } => commands::analyze(records, *numeric, output.as_deref()),
        Command::Check { instance, output } => commands::check(instance, output.as_deref()),
        Command::Search { config } => commands::search(config),
        Command::Converge { config } => commands::converge(config),
        Command::Singlet { angles, grid, output } => commands::singlet(angles.as_deref(), *grid, output.as_deref()),
    }
}

/// Maps a failure to its exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let internal = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<hvbell_core::Error>(), Some(hvbell_core::Error::Internal(_))));
    if internal {
        commands::EXIT_BREACH
    } else {
        1
    }
}
