//! Command-line surface: experiment configs, checkpoints and the six
//! subcommands.

mod checkpoint;
mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use commands::{
    cmd_ablate, cmd_baseline, cmd_diagnose, cmd_evaluate, cmd_generate, cmd_train, load_raw, prepare, prepare_series, Options,
    Prepared, Split,
};
pub use config::ExperimentConfig;

use crate::error::Error;
use crate::eval::BaselineKind;

#[derive(Debug, Parser)]
#[command(name = "rpmixer", version, about = "Spatial-temporal forecasting with random-projection mixers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration file (key = value).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Dataset file (.csv or binary); overrides the config.
    #[arg(long, global = true, value_name = "PATH")]
    dataset: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    /// Split to evaluate.
    #[arg(long, global = true, value_name = "SPLIT", default_value = "test", value_parser = ["train", "val", "test"])]
    split: String,
    /// Output directory; overrides the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Baseline to run: hl, linear or 1nn.
    #[arg(long, global = true, value_name = "NAME")]
    baseline: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset and a short summary.
    Generate,
    /// Train a model; writes checkpoint, history and resolved config.
    Train,
    /// Score a checkpoint (or the hl baseline) on a split.
    Evaluate,
    /// Train the full model and its three ablations.
    Ablate,
    /// Correlation-error diagram, distance preservation and decomposition check.
    Diagnose,
    /// Score a baseline: hl, linear or 1nn.
    Baseline,
}

/// Exit status for an error: 2 for usage and configuration problems, 1 otherwise.
pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Usage(_) | Error::Config(_) => 2,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status. Results go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cli.threads > 0 {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let result = options(&cli).and_then(|opts| match cli.command {
        Command::Generate => cmd_generate(&opts),
        Command::Train => cmd_train(&opts),
        Command::Evaluate => cmd_evaluate(&opts),
        Command::Ablate => cmd_ablate(&opts),
        Command::Diagnose => cmd_diagnose(&opts),
        Command::Baseline => cmd_baseline(&opts),
    });
    match result {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn options(cli: &Cli) -> Result<Options, Error> {
    Ok(Options {
        config: cli.config.clone(),
        dataset: cli.dataset.clone(),
        checkpoint: cli.checkpoint.clone(),
        split: cli.split.parse()?,
        out: cli.out.clone(),
        seed: cli.seed,
        baseline: cli.baseline.as_deref().map(str::parse::<BaselineKind>).transpose()?,
    })
}
