use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use covset::config::Caps;
use covset::error::CliError;
use covset::{load_config, run_to_disk, Overrides};

/// Random covering set experiments.
#[derive(Debug, Parser)]
#[command(name = "covset", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replicas; overrides the config.
    #[arg(long)]
    replicas: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: args.seed,
        replicas: args.replicas,
        out: args.out,
    };
    let cfg = load_config(&args.config, &overrides)?;
    let caps = Caps::from_env()?;
    for path in run_to_disk(&cfg, &caps, args.threads)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("covset: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
