//! `frem`: simulation, bridge estimation, forward-reverse EM runs and
//! double-sum benchmarks driven by a TOML config.

mod commands;
mod config;
mod data;
mod error;
mod zoo;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "frem", version, about = "Forward-reverse bridge estimation and EM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path at the truth parameters and write it with its observations.
    Simulate(Common),
    /// Estimate one bridge expectation with batch standard errors.
    Bridge(Common),
    /// Run replicated forward-reverse EM and tabulate each iteration.
    Frem(Common),
    /// Time the binned and direct kernel double sums.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core, 1 runs serially.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Simulate(c) | Command::Bridge(c) | Command::Frem(c) | Command::Bench(c)) = &cli.command;
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.threads {
        cfg.threads = t;
    }
    let out = c.out.clone().unwrap_or_else(|| cfg.output.clone());
    std::fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} threads: {e}", cfg.threads)))?;
    pool.install(|| match cli.command {
        Command::Simulate(_) => commands::simulate(&cfg, &out),
        Command::Bridge(_) => commands::bridge(&cfg, &out),
        Command::Frem(_) => commands::frem(&cfg, &out),
        Command::Bench(_) => commands::bench(&cfg, &out),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
