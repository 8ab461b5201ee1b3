//! `fepzr`: simulations, PDE solves, mappings and verification scenarios for
//! facilitated exclusion and facilitated zero-range lattice gases.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::RunConfig;
use crate::output::Staging;

#[derive(Parser)]
#[command(name = "fepzr", version, about)]
struct Cli {
    /// TOML configuration; a table named after the subcommand overrides top-level keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (must be absent or empty); defaults to `fepzr-<command>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replica ensembles (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also render SVG charts from the CSV outputs.
    #[arg(long, global = true)]
    emit_plots: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replica ensembles of the particle systems.
    Simulate(Overrides),
    /// Solve the macroscopic equation with a finite-volume scheme.
    Solve(Overrides),
    /// Map configurations or density fields between the two processes.
    Map(Overrides),
    /// Run named verification scenarios; exits nonzero if any check fails.
    Verify(Overrides),
    /// Repeat a simulation-versus-PDE comparison over a list of parameter values.
    Sweep(Overrides),
    /// Exact solution of a Riemann problem for the hyperbolic equations.
    Riemann(Overrides),
}

#[derive(clap::Args)]
struct Overrides {
    /// Configuration overrides such as `N=4096` or `profile=step:0.8,0.3`.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Simulate(_) => "simulate",
            Self::Solve(_) => "solve",
            Self::Map(_) => "map",
            Self::Verify(_) => "verify",
            Self::Sweep(_) => "sweep",
            Self::Riemann(_) => "riemann",
        }
    }

    fn overrides(&self) -> &[String] {
        match self {
            Self::Simulate(o) | Self::Solve(o) | Self::Map(o) | Self::Verify(o) | Self::Sweep(o) | Self::Riemann(o) => &o.set,
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let name = cli.command.name();
    let cfg = RunConfig::load(cli.config.as_deref(), name, cli.command.overrides(), cli.seed)?;
    let target = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("fepzr-{name}")));
    let staging = Staging::new(&target)?;
    staging.write("config.toml", cfg.to_toml()?)?;
    let ctx = Ctx { emit_plots: cli.emit_plots };
    let start = Instant::now();
    let ok = match cli.command {
        Command::Simulate(_) => commands::simulate::run(&cfg, &ctx, &staging)?,
        Command::Solve(_) => commands::solve::run(&cfg, &ctx, &staging)?,
        Command::Map(_) => commands::map::run(&cfg, &ctx, &staging)?,
        Command::Verify(_) => commands::verify::run(&cfg, &ctx, &staging)?,
        Command::Sweep(_) => commands::sweep::run(&cfg, &ctx, &staging)?,
        Command::Riemann(_) => commands::riemann::run(&cfg, &ctx, &staging)?,
    };
    let dir = staging.commit()?;
    eprintln!("{name}: wrote {} in {:.2}s", dir.display(), start.elapsed().as_secs_f64());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
