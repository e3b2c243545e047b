//! Report files: `summary.json`, `scales.csv` and `replicas.csv`.
//!
//! The summary keeps predictor output under `theory` and simulation output
//! under `empirical`; no field mixes the two.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{Caps, ExperimentConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub caps: CapsEcho,
    pub theory: Value,
    pub empirical: Value,
}

/// Caps as strings, since JSON numbers cannot hold every `u128`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapsEcho {
    pub grid_cap_bits: String,
    pub index_cap: u64,
}

impl From<&Caps> for CapsEcho {
    fn from(c: &Caps) -> Self {
        Self {
            grid_cap_bits: c.grid_cap_bits.to_string(),
            index_cap: c.index_cap,
        }
    }
}

/// One `(replica, j, N_j)` row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleRow {
    pub replica: u64,
    pub j: u32,
    pub count: u64,
}

/// Per-replica outcome; columns a command does not produce stay blank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaRow {
    pub replica: u64,
    pub cells: Option<u64>,
    pub hit: Option<bool>,
    pub slope: Option<f64>,
    pub rotated_cells: Option<u64>,
    pub rotated_hit: Option<bool>,
    pub survived: Option<bool>,
}

impl ReplicaRow {
    pub fn new(replica: u64) -> Self {
        Self {
            replica,
            cells: None,
            hit: None,
            slope: None,
            rotated_cells: None,
            rotated_hit: None,
            survived: None,
        }
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Summary,
    pub scales: Vec<ScaleRow>,
    pub replicas: Vec<ReplicaRow>,
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const SCALES_FILE: &str = "scales.csv";
pub const REPLICAS_FILE: &str = "replicas.csv";

impl Report {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn scales_csv(&self) -> String {
        let mut out = String::from("replica,j,N_j\n");
        for r in &self.scales {
            writeln!(out, "{},{},{}", r.replica, r.j, r.count).unwrap();
        }
        out
    }

    pub fn replicas_csv(&self) -> String {
        let mut out = String::from("replica,cells,hit,slope,rotated_cells,rotated_hit,survived\n");
        for r in &self.replicas {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.replica,
                cell(r.cells),
                cell(r.hit),
                cell(r.slope),
                cell(r.rotated_cells),
                cell(r.rotated_hit),
                cell(r.survived)
            )
            .unwrap();
        }
        out
    }

    /// Writes the report files into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let files = [
            (SUMMARY_FILE, self.summary_json()),
            (SCALES_FILE, self.scales_csv()),
            (REPLICAS_FILE, self.replicas_csv()),
        ];
        let mut written = Vec::new();
        for (name, text) in files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}
