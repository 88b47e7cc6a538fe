//! `spde`: run configured experiments and replay their reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use spde_core::harness::{self, Command, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "spde",
    version,
    about = "Conservative SPDE simulation and verification on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve and record diagnostics, mass balance and positivity.
    Simulate(RunArgs),
    /// Two initial data on shared noise: pathwise contraction.
    Couple(RunArgs),
    /// Semiflow, cocycle and uniqueness residuals.
    Flowcheck(RunArgs),
    /// Coupled-pair exceedance probabilities over several horizons.
    Ergodicity(RunArgs),
    /// Sampled check of the coefficient conditions.
    CheckAssumptions(RunArgs),
    /// Built-in problems with known answers.
    Selftest(RunArgs),
    /// Re-run a report and compare it bit for bit.
    Replay {
        /// Path to a `report.json`.
        report: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML, or JSON by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; replaces `seeds.base`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; replaces `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for ensembles (0 = all cores); replaces `workers`.
    #[arg(long)]
    workers: Option<usize>,
}

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn load(command: Command, args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&args.config, command) {
        (Some(file), _) => ExperimentConfig::load(file).with_context(|| format!("reading {}", file.display()))?,
        (None, Command::Selftest) => ExperimentConfig::selftest(PathBuf::from("selftest"), 0),
        (None, _) => bail!("`{command}` needs --config FILE"),
    };
    if cfg.command != command {
        bail!(
            "the configuration declares `{}` but `{command}` was requested",
            cfg.command
        );
    }
    if let Some(seed) = args.seed {
        cfg.seeds.base = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn run(command: Command, args: &RunArgs) -> anyhow::Result<bool> {
    let cfg = load(command, args)?;
    let outcome = harness::run(&cfg)?;
    println!("report: {}", outcome.report_path.display());
    Ok(outcome.passed())
}

fn replay(report: &Path) -> anyhow::Result<bool> {
    let outcome = harness::replay(report)?;
    for d in &outcome.differences {
        println!("MISMATCH {d}");
    }
    if outcome.matches() {
        println!("PASS replay: {} reproduced bit for bit", report.display());
    } else {
        println!("FAIL replay: {} differences", outcome.differences.len());
    }
    Ok(outcome.matches())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Simulate(a) => run(Command::Simulate, a),
        Cmd::Couple(a) => run(Command::Couple, a),
        Cmd::Flowcheck(a) => run(Command::Flowcheck, a),
        Cmd::Ergodicity(a) => run(Command::Ergodicity, a),
        Cmd::CheckAssumptions(a) => run(Command::CheckAssumptions, a),
        Cmd::Selftest(a) => run(Command::Selftest, a),
        Cmd::Replay { report } => replay(report),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
