//! `nel`: experiment harness for nonlocal free energies.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod plot;
mod report;

use config::Config;
use report::Run;

#[derive(Parser)]
#[command(name = "nel", version, about = "Nonlocal free energy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Overrides the `seed` key of the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Energy gap against distance to the ball for perturbation families
    StabilityScan(Common),
    /// Energy along upward translations for the potential without minimizers
    Nonexistence(Common),
    /// Closed-form critical mass against the inflection of the ball energy
    CriticalMass(Common),
    /// Empirical stability modulus over masses and distances
    Modulus(Common),
    /// Transport chain and push-forward checks on a shape zoo
    Transport(Common),
    /// Steiner symmetrization monotonicity on a shape zoo
    Symmetrize(Common),
    /// Volume-constrained annealing on the grid
    Minimize(Common),
    /// Grid and Monte Carlo perimeter estimates with the scaling law
    Perimeter(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<bool> {
    type Driver = fn(&Config, &mut Run) -> Result<()>;
    let (name, common, driver): (&'static str, Common, Driver) = match command {
        Command::StabilityScan(c) => ("stability-scan", c, commands::stability::run),
        Command::Nonexistence(c) => ("nonexistence", c, commands::nonexistence::run),
        Command::CriticalMass(c) => ("critical-mass", c, commands::critical_mass::run),
        Command::Modulus(c) => ("modulus", c, commands::modulus::run),
        Command::Transport(c) => ("transport", c, commands::transport::run),
        Command::Symmetrize(c) => ("symmetrize", c, commands::symmetrize::run),
        Command::Minimize(c) => ("minimize", c, commands::minimize::run),
        Command::Perimeter(c) => ("perimeter", c, commands::perimeter::run),
    };
    let cfg = Config::load(&common.config)?;
    let configured: u64 = cfg.section(name).get("seed", 1)?;
    let seed = common.seed.unwrap_or(configured);
    let mut run = Run::new(name, &common.out, seed)?;
    driver(&cfg, &mut run)?;
    for v in run.verdicts() {
        println!(
            "{} {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    run.finish(&cfg.echo())
}
