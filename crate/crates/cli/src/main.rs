//! Experiment runner for the nudgefem data assimilation toolkit.
//!
//! Every verb reads a JSON configuration, runs one numerical study, and
//! writes its results (CSV series, field snapshots, solver archives) plus a
//! `manifest.json` indexing every emitted file into the `--out` directory.
//! Identical configurations produce byte-identical CSV outputs.

mod commands;
mod config;
mod jobs;
mod outdir;
mod probes;
mod raster;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Errors are reported as plain diagnostics; `Send + Sync` so sweep points
/// can fail from worker threads.
pub type CliError = Box<dyn std::error::Error + Send + Sync>;
pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "nudgefem",
    version,
    about = "Finite element data assimilation experiments (algebraic nudging)",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if absent. Receives a manifest.json
    /// listing every file the run emits.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the coarse sampling interpolant against probe fields:
    /// first-order accuracy toward the field, second-order toward its
    /// cellwise averages.
    InterpCheck(RunArgs),
    /// Manufactured-solution convergence study for the assimilating
    /// transport stepper (expected third order in h).
    ConvRate(RunArgs),
    /// Error-versus-time sweep over feedback strengths and observation
    /// widths for the transport stepper.
    MuSweep(RunArgs),
    /// Contaminant-in-a-river demonstration: reference run plus
    /// assimilation from zero data at several feedback strengths.
    TransportDemo(RunArgs),
    /// Steady Stokes solve (plug inflow, natural outflow); writes a
    /// velocity field file that transport-demo can consume.
    Stokes(RunArgs),
    /// Generate a triangulation and write it in the plain-text mesh format
    /// the other verbs read.
    GenMesh(RunArgs),
    /// Flow past a cylinder: reference run with archived states, then
    /// assimilation replaying the archive as observations.
    Cylinder {
        #[command(subcommand)]
        phase: CylinderPhase,
    },
}

#[derive(Subcommand)]
enum CylinderPhase {
    /// Reference solve from rest; archives trailing states and records
    /// lift/drag and kinetic energy.
    Dns(RunArgs),
    /// Assimilation against an archived reference over a list of
    /// observation widths.
    Da(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::InterpCheck(args) => commands::interp_check::run(&args.config, &args.out),
        Command::ConvRate(args) => commands::conv_rate::run(&args.config, &args.out),
        Command::MuSweep(args) => commands::mu_sweep::run(&args.config, &args.out),
        Command::TransportDemo(args) => commands::transport_demo::run(&args.config, &args.out),
        Command::Stokes(args) => commands::stokes::run(&args.config, &args.out),
        Command::GenMesh(args) => commands::gen_mesh::run(&args.config, &args.out),
        Command::Cylinder { phase: CylinderPhase::Dns(args) } => {
            commands::cylinder_dns::run(&args.config, &args.out)
        }
        Command::Cylinder { phase: CylinderPhase::Da(args) } => {
            commands::cylinder_da::run(&args.config, &args.out)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
