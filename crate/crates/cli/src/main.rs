//! `extrap`: runs seed-scene extrapolation batches and analyzes their metric tables.

mod analyze;
mod error;
mod run;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "extrap", version, about = "Seed-scene extrapolation by closed-loop simulation")]
struct Cli {
    /// Worker threads; defaults to the available parallelism. Outputs do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate randomly assigned child-scenarios.
    Simulate(RunArgs),
    /// Simulate every assignment of roster models to participants.
    Enumerate(RunArgs),
    /// Density, cumulative, threshold and convergence CSVs from metric tables.
    Analyze(analyze::AnalyzeArgs),
    /// Write a synthetic scene as a map, a tracks file and a matching config.
    SynthScene(synth::SynthArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `n_runs` (simulate only).
    #[arg(long)]
    n_runs: Option<usize>,
    /// Overrides `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `replan_interval`.
    #[arg(long)]
    replan_interval: Option<usize>,
    /// Overrides `enumeration_cap` (enumerate only).
    #[arg(long)]
    cap: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return fail(&CliError::Validation("--jobs must be >= 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            return fail(&CliError::Validation(format!("cannot start {jobs} workers: {e}")));
        }
    }
    let result = match &cli.command {
        Command::Simulate(args) => run::simulate(args, run::Mode::Sample),
        Command::Enumerate(args) => run::simulate(args, run::Mode::Enumerate),
        Command::Analyze(args) => analyze::analyze(args),
        Command::SynthScene(args) => synth::synth_scene(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error[{}]: {e}", e.kind());
    ExitCode::from(e.exit_code())
}
