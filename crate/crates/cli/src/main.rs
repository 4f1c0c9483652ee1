// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smoothdos_cli::{reproduce, resolve, run, CliError, Command, ExperimentConfig, Overrides, OUT_ENV};

/// Density-of-states estimators and numerical certificates for random
/// Schrödinger operators.
#[derive(Parser, Debug)]
#[command(name = "smoothdos", version)]
struct Cli {
    /// Experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Smoothed density of states per epsilon.
    Dos,
    /// Energy derivatives of the smoothed density of states.
    DosDeriv,
    /// Integrated density of states.
    Ids,
    /// Fractional moments of the Green function against distance.
    Fracmom,
    /// Telescoping increments over growing volumes.
    Telescope,
    /// Numerical verification suite.
    Verify,
    /// Re-run a manifest and byte-compare its outputs.
    Reproduce {
        /// Path to `manifest.json`.
        manifest: PathBuf,
    },
}

fn load(path: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            ExperimentConfig::parse(&text)
        }
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let command = match cli.command {
        Cmd::Reproduce { manifest } => {
            let m = reproduce(&manifest, cli.workers)?;
            println!("reproduced {} output(s) from {}", m.outputs.len(), manifest.display());
            return Ok(());
        }
        Cmd::Dos => Command::Dos,
        Cmd::DosDeriv => Command::DosDeriv,
        Cmd::Ids => Command::Ids,
        Cmd::Fracmom => Command::Fracmom,
        Cmd::Telescope => Command::Telescope,
        Cmd::Verify => Command::Verify,
    };
    let ov = Overrides { out: cli.out, seed: cli.seed, workers: cli.workers };
    let cfg = resolve(load(cli.config.as_ref())?, command, &ov)?;
    let manifest = run(&cfg)?;
    for o in &manifest.outputs {
        println!("{}/{}", cfg.output.directory, o.file);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
