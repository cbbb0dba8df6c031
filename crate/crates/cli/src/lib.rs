//! The `fppflow` experiment runner.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use commands::Context;
use config::{resolve_workers, ExperimentConfig};
use error::CliError;

/// Seeded first-passage flow experiments on lattice boxes.
#[derive(Parser)]
#[command(name = "fppflow", version)]
pub struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a capacity field on a box.
    Sample,
    /// Maximal flow and a minimal cut on one sampled box.
    Flow,
    /// Pinned minimal cut on a slab.
    Tau,
    /// Replicated estimate of the flow constant.
    Nu,
    /// Upper large-deviation rate over a grid of λ.
    Psi,
    /// Exact tail probabilities of a tiny box by enumeration.
    Oracle,
    /// Property suite over random instances.
    Verify,
    /// Merge psi or nu tables from independent runs.
    Report {
        inputs: Vec<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    let workers = resolve_workers(cli.workers, std::env::var("FPPFLOW_WORKERS").ok(), config.workers)?;
    let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let cx = Context { config: &config, workers, out: &out };
    match &cli.command {
        Command::Sample => commands::sample(&cx),
        Command::Flow => commands::flow(&cx),
        Command::Tau => commands::tau(&cx),
        Command::Nu => commands::nu(&cx),
        Command::Psi => commands::psi(&cx),
        Command::Oracle => commands::oracle(&cx),
        Command::Verify => commands::verify(&cx),
        Command::Report { inputs } => commands::report(&cx, inputs),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fppflow: {e}");
            e.exit_code()
        }
    }
}
