//! `vfp`: run experiments for the kinetic Vlasov-Fokker-Planck equation
//! from a TOML configuration file.
//!
//! Exit codes: 0 ok, 1 configuration, 2 assumptions, 3 CFL, 4 numerical
//! blow-up, 5 non-convergence.

mod commands;
mod config;
mod exit;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{ArgAction, Parser, Subcommand};

use crate::commands::Context;
use crate::config::Loaded;
use crate::exit::{classify, Code, Failure};

/// Only environment variable the tool reads.
const OUTPUT_DIR_VAR: &str = "VFP_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "vfp-out";

#[derive(Debug, Parser)]
#[command(name = "vfp", version, about = "Kinetic Vlasov-Fokker-Planck laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `particles.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides VFP_OUTPUT_DIR and `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the structural assumptions on the potentials (and initial data).
    Check,
    /// Run the grid solver; writes series.csv, density.vfpd, summary.json.
    SimulatePde,
    /// Run the particle system; writes stats.csv and ensemble.vfpe.
    SimulateParticles,
    /// Scalar branches and a full fixed point; writes branches.csv.
    Stationary,
    /// Bracket the critical temperature; writes scan.csv.
    PhaseScan,
    /// Free energy, lower bound and moments of a density snapshot.
    FreeEnergy {
        /// A `VFPD` snapshot, e.g. density.vfpd from simulate-pde.
        snapshot: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::SimulatePde => "simulate-pde",
            Command::SimulateParticles => "simulate-particles",
            Command::Stationary => "stationary",
            Command::PhaseScan => "phase-scan",
            Command::FreeEnergy { .. } => "free-energy",
        }
    }
}

fn output_dir(cli: &Cli, loaded: &Loaded) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from))
        .or_else(|| loaded.config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn run(cli: Cli) -> Result<Code> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let path = cli.config.as_deref().ok_or_else(|| Failure::config("--config <path> is required"))?;
    let mut loaded = Loaded::read(path)?;
    if let (Some(seed), Some(p)) = (cli.seed, loaded.config.particles.as_mut()) {
        p.seed = seed;
    }
    if let Command::Check = cli.command {
        return commands::check(&loaded);
    }
    let out = output_dir(&cli, &loaded);
    let ctx = Context::new(loaded, cli.command.name(), out);
    match &cli.command {
        Command::Check => unreachable!("handled above"),
        Command::SimulatePde => commands::simulate_pde(&ctx)?,
        Command::SimulateParticles => commands::simulate_particles(&ctx)?,
        Command::Stationary => commands::stationary(&ctx)?,
        Command::PhaseScan => commands::phase_scan_cmd(&ctx)?,
        Command::FreeEnergy { snapshot } => commands::free_energy_cmd(&ctx, snapshot)?,
    }
    Ok(Code::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap would exit with 2, which is reserved for failed assumptions
            return ExitCode::from(if e.use_stderr() { Code::Config as u8 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e) as u8)
        }
    }
}
