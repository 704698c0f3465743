use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use specfilter_harness::config::{ExperimentConfig, Mode};

#[derive(Parser)]
#[command(
    name = "specfilter",
    about = "Deterministic experiment runner for the spectral filtering toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: ModeCommand,
    /// Path to the TOML experiment configuration.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Overrides the base seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker thread count; 0 keeps the library default.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum ModeCommand {
    /// Monte Carlo convergence rates across a sample size grid.
    Rates,
    /// Regime phase diagram over the (alpha, beta) plane.
    Phase,
    /// Envelope bound suite with negative control and filter sweep.
    Bounds,
    /// Packing, certification, and information lower bounds.
    Lowerbound,
    /// Stopping-time comparison across PDE formulations.
    Pde,
    /// Route-identity checks for the recursion implementations.
    Filtercheck,
}

impl ModeCommand {
    fn mode(&self) -> Mode {
        match self {
            ModeCommand::Rates => Mode::Rates,
            ModeCommand::Phase => Mode::Phase,
            ModeCommand::Bounds => Mode::Bounds,
            ModeCommand::Lowerbound => Mode::Lowerbound,
            ModeCommand::Pde => Mode::Pde,
            ModeCommand::Filtercheck => Mode::Filtercheck,
        }
    }
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    let requested = cli.command.mode();
    if cfg.mode != requested {
        anyhow::bail!(
            "configuration is for mode {} but the {} subcommand was invoked",
            cfg.mode,
            requested
        );
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()?;
    }
    let outcome = specfilter_harness::run(&cfg, &cli.out_dir)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    println!(
        "{}: {}",
        cfg.mode,
        if outcome.passed { "PASS" } else { "FAIL" }
    );
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
