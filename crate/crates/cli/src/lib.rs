// Copyright 2026 The qoc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for the scenario runner.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_catalog, cmd_run, cmd_sweep, Axis};
use crate::config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "qoc",
    version,
    about = "Band-limited, amplitude-constrained pulse optimisation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimisation.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a scenario over a parameter axis.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[command(flatten)]
        output: OutputArgs,
        /// Concurrent sweep points (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// List the built-in scenarios.
    Catalog,
}

#[derive(Debug, clap::Args)]
pub struct OutputArgs {
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Overrides the random seed of the initial pulses.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace an existing output directory.
    #[arg(long)]
    pub force: bool,
}

fn load(path: &std::path::Path, seed: Option<u64>) -> Result<RunConfig, String> {
    let mut cfg = parse_config(path).map_err(|errs| {
        errs.iter()
            .map(ConfigError::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    })?;
    if let Some(seed) = seed {
        cfg.scenario = cfg.scenario.with_seed(seed);
        cfg.overrides.seed = Some(seed);
    }
    Ok(cfg)
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Run { config, output } => {
            load(&config, output.seed).and_then(|cfg| cmd_run(&cfg, &output.out, output.force))
        }
        Command::Sweep {
            config,
            axis,
            output,
            workers,
        } => {
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
                .max(1);
            load(&config, output.seed)
                .and_then(|cfg| cmd_sweep(&cfg, axis, &output.out, output.force, workers))
        }
        Command::Validate { config } => load(&config, None).map(|cfg| {
            println!(
                "{}: ok ({} with {})",
                config.display(),
                cfg.scenario.name,
                cfg.method
            );
            commands::Status::Converged
        }),
        Command::Catalog => {
            print!("{}", cmd_catalog());
            Ok(commands::Status::Converged)
        }
    };
    match outcome {
        Ok(status) => status.code(),
        Err(msg) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            1
        }
    }
}
