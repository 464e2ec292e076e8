mod cache;
mod config;
mod jlab;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;
use sechyp::Verdict;

/// Lyapunov spectra and hyperbolicity certificates for flows.
///
/// Exit status: 0 all Pass, 1 any Fail, 2 any Indeterminate, 3 runtime error.
#[derive(Parser)]
#[command(name = "sechyp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true, conflicts_with = "example")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, global = true, value_enum)]
    example: Option<Example>,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random initial conditions and Monte-Carlo suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the configured orbits and cache them.
    Simulate,
    /// Lyapunov and p-sectional exponents per orbit.
    Spectrum,
    /// Run the certificate chain and aggregate the ensemble verdict.
    Verify,
    /// Monte-Carlo suites on random J-separated matrices.
    Jlab,
}

#[derive(ValueEnum, Clone, Copy)]
enum Example {
    /// Diagonal linear flow with rates (-3, 2, 4, 10).
    Wedge,
    /// Classic Lorenz parameters.
    Lorenz,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match (&cli.config, cli.example) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(Example::Wedge)) => RunConfig::example("wedge")?,
        (None, Some(Example::Lorenz)) => RunConfig::example("lorenz")?,
        (None, None) => bail!("either --config or --example is required"),
    };
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<Verdict> {
    let cfg = resolve(cli)?;
    let out = cfg.output.clone();
    match cli.command {
        Command::Simulate => run::simulate(&cfg, &out),
        Command::Spectrum => run::spectrum(&cfg, &out),
        Command::Verify => run::verify(&cfg, &out),
        Command::Jlab => run::jlab(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(Verdict::Pass) => ExitCode::from(0),
        Ok(Verdict::Fail) => ExitCode::from(1),
        Ok(Verdict::Indeterminate) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
