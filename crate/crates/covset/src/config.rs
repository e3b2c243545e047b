//! Experiment configuration files.
//!
//! A config is one JSON object. Every field except `command` has a default,
//! and the fully resolved config is echoed into each report.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use covset_core::coversim::{ShapeFamily, SimWindow};
use covset_core::geometry::SnowflakeExponents;
use covset_core::grid::DEFAULT_GRID_CAP_BITS;
use covset_core::radii::{RadiusSequence, DEFAULT_INDEX_CAP};
use covset_core::targets::TargetSet;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Predict,
    CoverDim,
    Hit,
    IntersectDim,
    BadCase,
    Rotate,
    Percolate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Predict => "predict",
            Command::CoverDim => "cover-dim",
            Command::Hit => "hit",
            Command::IntersectDim => "intersect-dim",
            Command::BadCase => "bad-case",
            Command::Rotate => "rotate",
            Command::Percolate => "percolate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeqSpec {
    PowerLaw {
        #[serde(default = "one")]
        c: f64,
        a: f64,
    },
    Geometric {
        lambda: f64,
    },
    Explicit {
        radii: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for SeqSpec {
    fn default() -> Self {
        SeqSpec::PowerLaw { c: 1.0, a: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    #[default]
    Ball,
    AxisRect { h: Vec<f64> },
    RotatedRect { h: Vec<f64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    DigitCantor { base: u32, digits: Vec<Vec<u32>> },
    /// `fixed` lists `[axis, value]` pairs with 0-based axes.
    AffineSlice { fixed: Vec<(usize, f64)> },
    #[default]
    FullTorus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSpec {
    pub m0: u32,
    pub m1: u32,
    pub depth: u32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            m0: 6,
            m1: 14,
            depth: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PercolationSpec {
    pub s: f64,
    /// Depth of the grid intersected with the target.
    pub depth: u32,
    /// Depth of the survival check; deep enough that finite-depth survival
    /// matches the limit.
    pub survival_depth: u32,
}

impl Default for PercolationSpec {
    fn default() -> Self {
        Self {
            s: 0.5,
            depth: 20,
            survival_depth: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionSpec {
    pub n_max: u64,
    /// Generations from here on are reported separately as the tail.
    pub min_generation: u32,
    pub replicas: u64,
}

impl Default for ProjectionSpec {
    fn default() -> Self {
        Self {
            n_max: 1_000_000,
            min_generation: 8,
            replicas: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub seq: SeqSpec,
    #[serde(default)]
    pub shape: ShapeSpec,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub percolation: PercolationSpec,
    #[serde(default)]
    pub projection: ProjectionSpec,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_d() -> usize {
    1
}

fn default_replicas() -> u64 {
    20
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Resource caps, overridable through the environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Caps {
    pub grid_cap_bits: u128,
    pub index_cap: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            grid_cap_bits: DEFAULT_GRID_CAP_BITS,
            index_cap: DEFAULT_INDEX_CAP,
        }
    }
}

pub const ENV_GRID_CAP: &str = "COVSET_GRID_CAP_BITS";
pub const ENV_INDEX_CAP: &str = "COVSET_INDEX_CAP";

impl Caps {
    pub fn from_env() -> Result<Self, CliError> {
        let mut caps = Self::default();
        if let Ok(v) = std::env::var(ENV_GRID_CAP) {
            caps.grid_cap_bits = v
                .trim()
                .parse()
                .map_err(|_| CliError::config(ENV_GRID_CAP, format!("not an integer: {v:?}")))?;
        }
        if let Ok(v) = std::env::var(ENV_INDEX_CAP) {
            caps.index_cap = v
                .trim()
                .parse()
                .map_err(|_| CliError::config(ENV_INDEX_CAP, format!("not an integer: {v:?}")))?;
        }
        Ok(caps)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds every domain object once so bad fields fail before any work.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.d == 0 {
            return Err(CliError::config("d", "must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(CliError::config("replicas", "must be at least 1"));
        }
        self.sequence()?;
        if let Some(h) = self.exponents()? {
            if h.dim() != self.d {
                return Err(CliError::config(
                    "shape.h",
                    format!("{} exponents for d = {}", h.dim(), self.d),
                ));
            }
        }
        self.target_set()?;
        Ok(())
    }

    pub fn sequence(&self) -> Result<RadiusSequence, CliError> {
        let seq = match &self.seq {
            SeqSpec::PowerLaw { c, a } => RadiusSequence::power_law(*c, *a),
            SeqSpec::Geometric { lambda } => RadiusSequence::geometric(*lambda),
            SeqSpec::Explicit { radii } => RadiusSequence::explicit(radii.clone()),
        };
        seq.map_err(|e| CliError::field("seq", e))
    }

    /// Exponents of rectangle families; `None` for balls.
    pub fn exponents(&self) -> Result<Option<SnowflakeExponents>, CliError> {
        match &self.shape {
            ShapeSpec::Ball => Ok(None),
            ShapeSpec::AxisRect { h } | ShapeSpec::RotatedRect { h } => SnowflakeExponents::new(h.clone())
                .map(Some)
                .map_err(|e| CliError::field("shape.h", e)),
        }
    }

    /// Exponents, with the isotropic ones standing in for balls.
    pub fn exponents_or_isotropic(&self) -> Result<SnowflakeExponents, CliError> {
        Ok(self
            .exponents()?
            .unwrap_or_else(|| SnowflakeExponents::isotropic(self.d)))
    }

    pub fn family(&self) -> Result<ShapeFamily, CliError> {
        Ok(match (&self.shape, self.exponents()?) {
            (ShapeSpec::Ball, _) => ShapeFamily::Ball,
            (ShapeSpec::AxisRect { .. }, Some(h)) => ShapeFamily::AxisRect(h),
            (ShapeSpec::RotatedRect { .. }, Some(h)) => ShapeFamily::RotatedRect(h),
            _ => unreachable!("rectangle shapes always carry exponents"),
        })
    }

    pub fn target_set(&self) -> Result<TargetSet, CliError> {
        let t = match &self.target {
            TargetSpec::DigitCantor { base, digits } => TargetSet::digit_cantor(*base, digits.clone()),
            TargetSpec::AffineSlice { fixed } => TargetSet::affine_slice(self.d, fixed.clone()),
            TargetSpec::FullTorus => TargetSet::full_torus(self.d),
        }
        .map_err(|e| CliError::field("target", e))?;
        if t.dim() != self.d {
            return Err(CliError::config(
                "target",
                format!("target is {}-dimensional, d = {}", t.dim(), self.d),
            ));
        }
        Ok(t)
    }

    pub fn sim_window(&self, caps: &Caps) -> Result<SimWindow, CliError> {
        SimWindow::with_caps(
            self.d,
            self.window.m0,
            self.window.m1,
            self.window.depth,
            self.family()?,
            self.sequence()?,
            caps.grid_cap_bits,
            caps.index_cap,
        )
        .map_err(|e| CliError::field("window", e))
    }
}
