//! `schrod`: band structures, reproductions and finite-section experiments.
//!
//! Exit codes: 0 pass, 1 check failed, 2 usage, 3 inconclusive.

mod commands;
mod config;
mod exit;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, REPRODUCTIONS, VERDICTS};
use exit::Failure;

#[derive(Parser)]
#[command(name = "schrod", version, about = "Discrete Schrödinger operators: bands, reproductions, finite sections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Bands, gaps and Dirichlet eigenvalues of a periodic potential.
    Bands(Common),
    /// Re-run a worked example or an exhaustive exact check.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(REPRODUCTIONS))]
        name: Option<String>,
    },
    /// Finite section method on a section scheme.
    Fsm {
        #[command(flatten)]
        common: Common,
        /// Required verdict; exit 1 on mismatch.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(VERDICTS))]
        expect: Option<String>,
        /// Report only; never fails on the verdict.
        #[arg(long)]
        exploratory: bool,
    },
}

fn resolve(common: &Common, need_config: bool) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None if need_config => return Err(Failure::Usage("--config is required".into())),
        None => ExperimentConfig::default(),
    };
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bands(common) => commands::bands(&resolve(&common, true)?),
        Command::Reproduce { common, name } => {
            let mut cfg = resolve(&common, false)?;
            if name.is_some() {
                cfg.name = name;
            }
            reproduce::run(&cfg)
        }
        Command::Fsm { common, expect, exploratory } => {
            let mut cfg = resolve(&common, true)?;
            if expect.is_some() {
                cfg.expect = expect;
            }
            cfg.exploratory |= exploratory;
            commands::fsm(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("schrod: {}", f.message());
            f.code()
        }
    }
}
