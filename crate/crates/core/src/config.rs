//! JSON run configuration for the command-line tool.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelParams;
use crate::montecarlo::McConfig;
use crate::oracle::{DEFAULT_ENUM_GUARD, MAX_ENUM_GUARD};

/// Errors from the command-line layer.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration; exit status 2.
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] crate::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

/// An integer axis: an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntGrid {
    List(Vec<u32>),
    Range { min: u32, max: u32 },
}

impl IntGrid {
    pub fn values(&self) -> Vec<u32> {
        match self {
            IntGrid::List(v) => v.clone(),
            IntGrid::Range { min, max } => (*min..=*max).collect(),
        }
    }
}

/// Parameter grid. `l` and `m` default to their full ranges for each `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    #[serde(rename = "N")]
    pub n: IntGrid,
    #[serde(default)]
    pub l: Option<IntGrid>,
    #[serde(default)]
    pub m: Option<IntGrid>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self { n: IntGrid::Range { min: 3, max: 12 }, l: None, m: None }
    }
}

impl ParamGrid {
    /// Every valid `(N, l, m)` on the grid; combinations outside the
    /// parameter domain are skipped.
    pub fn params(&self) -> Vec<ModelParams> {
        let mut out = Vec::new();
        for n in self.n.values() {
            let ls = self.l.as_ref().map_or_else(|| (0..n).collect(), IntGrid::values);
            let ms = self.m.as_ref().map_or_else(|| (1..=n).collect(), IntGrid::values);
            for &l in &ls {
                for &m in &ms {
                    if let Ok(p) = ModelParams::new(n, l, m) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// `points` evenly spaced values from `min` to `max`.
    Linear,
    /// `t_i = (i/points)·scale·√N` for `i = 1 ..= points`.
    SqrtNScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TGridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
    /// Multiplier of `√N` for the scaled spacing.
    pub scale: f64,
}

impl Default for TGridSpec {
    fn default() -> Self {
        Self { min: 0.0, max: 0.0, points: 50, spacing: Spacing::SqrtNScaled, scale: 2.0 }
    }
}

impl TGridSpec {
    pub fn values(&self, n: u32) -> Vec<f64> {
        let p = self.points;
        match self.spacing {
            Spacing::SqrtNScaled => {
                let top = self.scale * f64::from(n).sqrt();
                (1..=p).map(|i| i as f64 / p as f64 * top).collect()
            }
            Spacing::Linear if p == 1 => vec![self.min],
            Spacing::Linear => (0..p)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (p - 1) as f64)
                .collect(),
        }
    }
}

/// Scales probed for exponential moments: `K = multiplier·√N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KGridSpec {
    pub sqrt_n_multipliers: Vec<f64>,
}

impl Default for KGridSpec {
    fn default() -> Self {
        Self { sqrt_n_multipliers: vec![0.6, 0.75, 1.0, 2.0, 5.0] }
    }
}

impl KGridSpec {
    pub fn values(&self, n: u32) -> Vec<f64> {
        let s = f64::from(n).sqrt();
        self.sqrt_n_multipliers.iter().map(|c| c * s).collect()
    }
}

/// Test hooks for exercising failure paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultInjection {
    /// Multiplies the McDiarmid tail bounds before comparison in the `tails` suite.
    pub tail_bound_scale: f64,
}

impl Default for FaultInjection {
    fn default() -> Self {
        Self { tail_bound_scale: 1.0 }
    }
}

pub const SUITES: [&str; 9] =
    ["moments", "special_forms", "tails", "entropy", "crossover", "chain", "psi2", "qfunction", "montecarlo"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: ParamGrid,
    pub t_grid: TGridSpec,
    pub k_grid: KGridSpec,
    pub mc: McConfig,
    pub output_dir: PathBuf,
    pub suites: Vec<String>,
    /// Largest `N` the exact oracle may enumerate.
    pub max_enum_n: u32,
    pub fault_injection: FaultInjection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: ParamGrid::default(),
            t_grid: TGridSpec::default(),
            k_grid: KGridSpec::default(),
            mc: McConfig { samples: 20_000, batch: 20_000, ..McConfig::default() },
            output_dir: PathBuf::from("out"),
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            max_enum_n: DEFAULT_ENUM_GUARD,
            fault_injection: FaultInjection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid.params().is_empty() {
            return Err(CliError::usage("parameter grid is empty"));
        }
        if self.t_grid.points == 0 {
            return Err(CliError::usage("t_grid.points must be positive"));
        }
        if self.t_grid.spacing == Spacing::Linear && !(self.t_grid.min >= 0.0 && self.t_grid.max >= self.t_grid.min) {
            return Err(CliError::usage("linear t_grid needs 0 <= min <= max"));
        }
        if self.k_grid.sqrt_n_multipliers.iter().any(|c| !(*c > 0.0)) {
            return Err(CliError::usage("k_grid multipliers must be positive"));
        }
        if let Some(bad) = self.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
            return Err(CliError::usage(format!("unknown suite {bad:?}; known: {}", SUITES.join(","))));
        }
        if self.max_enum_n > MAX_ENUM_GUARD {
            return Err(CliError::usage(format!("max_enum_n must be <= {MAX_ENUM_GUARD}")));
        }
        self.mc.validate().map_err(|e| CliError::usage(format!("mc: {e}")))?;
        Ok(())
    }
}
