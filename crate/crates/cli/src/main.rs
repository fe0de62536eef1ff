//! Command-line surface for the EEG cognitive-load pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cogload_cli::commands;
use cogload_cli::config::RunConfig;
use cogload_cli::error::Result;

#[derive(Parser)]
#[command(
    name = "cogload",
    about = "EEG cognitive-load pipeline: tokenize, pre-train, transfer, evaluate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (key = value lines); defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override train.seed (and the synthetic generator seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Override io.jobs (fold-level parallelism; 1 = serial).
    #[arg(long)]
    jobs: Option<usize>,
    /// Override io.out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic EEG dataset on disk.
    Synth(CommonArgs),
    /// Extract and normalize feature tokens into a CSV dump.
    Featdump(CommonArgs),
    /// Masked-autoencoder pre-training to a checkpoint.
    Pretrain(CommonArgs),
    /// k-fold downstream evaluation (frozen, fine-tuned, or supervised).
    Transfer(CommonArgs),
    /// Sweep one axis: blocks, head, or scheduler.
    Ablate(CommonArgs),
    /// Recompute metrics from a predictions export.
    Eval {
        /// predictions.csv produced by `transfer`.
        #[arg(long)]
        predictions: PathBuf,
        /// Optional directory for a recomputed metrics.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn effective_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    // flags win over file values
    if let Some(seed) = args.seed {
        cfg.set("train.seed", &seed.to_string())?;
    }
    if let Some(jobs) = args.jobs {
        cfg.set("io.jobs", &jobs.to_string())?;
    }
    if let Some(out) = &args.out {
        cfg.set("io.out_dir", &out.display().to_string())?;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => commands::synth::run(&effective_config(&args)?),
        Command::Featdump(args) => commands::featdump::run(&effective_config(&args)?),
        Command::Pretrain(args) => commands::pretrain::run(&effective_config(&args)?),
        Command::Transfer(args) => commands::transfer::run(&effective_config(&args)?),
        Command::Ablate(args) => commands::ablate::run(&effective_config(&args)?),
        Command::Eval { predictions, out } => {
            commands::evalcmd::run(&predictions, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
