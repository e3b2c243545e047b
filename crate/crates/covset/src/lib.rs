//! Experiment driver for random covering sets: config parsing, replica
//! pools and report files on top of `covset-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod pool;
pub mod report;

use std::path::{Path, PathBuf};

use config::{Caps, ExperimentConfig};
use error::CliError;

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(r) = overrides.replicas {
        cfg.replicas = r;
    }
    if let Some(out) = &overrides.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `cfg` on `threads` worker threads and writes the report files.
pub fn run_to_disk(cfg: &ExperimentConfig, caps: &Caps, threads: usize) -> Result<Vec<PathBuf>, CliError> {
    let pool = pool::RayonPool::new(threads)
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    let report = commands::run(cfg, caps, &pool)?;
    report.write(&cfg.out)
}
