//! Campaign configuration, read from a single JSON document.

use std::fs;
use std::path::{Path, PathBuf};

use lepski_core::dgp::{ProcessSpec, StoppingSpec};
use lepski_core::rates::ModulusSpec;
use lepski_core::stability::{NoiseLaw, NoiseSpec, ScaleRule, StopRule};
use lepski_core::GridConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Smoothness envelope used for `W̄` and the rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModulusConfig {
    /// `w(h) = scale * h^s`.
    Holder { s: f64, scale: f64 },
    /// The realized bias sup of each sample; needs the true regression function.
    Bias,
}

impl ModulusConfig {
    pub fn holder_spec(&self, grid: &GridConfig) -> CliResult<Option<ModulusSpec>> {
        match *self {
            ModulusConfig::Holder { s, scale } => ModulusSpec::holder(s, scale, None, grid)
                .map(Some)
                .map_err(|e| CliError::Config(format!("modulus: {e}"))),
            ModulusConfig::Bias => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub t_grid: Vec<f64>,
}

/// Increment law of one stability block; `gamma` defaults to the exact moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    #[serde(flatten)]
    pub law: NoiseLaw,
    pub alpha: u8,
    pub mu: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl NoiseConfig {
    pub fn spec(&self) -> CliResult<NoiseSpec> {
        let gamma = self.gamma.unwrap_or_else(|| self.law.exp_moment(self.alpha, self.mu));
        NoiseSpec::new(self.law, self.alpha, self.mu, gamma).map_err(|e| CliError::Config(format!("noise: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRange {
    pub a0: f64,
    pub a1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityBlock {
    pub noise: NoiseConfig,
    pub lambdas: Vec<f64>,
    pub scales: Vec<ScaleRule>,
    pub stops: Vec<StopRule>,
    #[serde(default)]
    pub a_values: Vec<f64>,
    #[serde(default)]
    pub uniform: Vec<UniformRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub n_rep: usize,
    pub blocks: Vec<StabilityBlock>,
}

fn default_n_rep() -> usize {
    1
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub process: Option<ProcessSpec>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub modulus: Option<ModulusConfig>,
    /// Sample sizes; with a budget stopping rule the entries are budgets.
    #[serde(default)]
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_n_rep")]
    pub n_rep: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub tail: Option<TailConfig>,
    #[serde(default)]
    pub stability: Option<StabilityConfig>,
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n_rep < 1 {
            return Err(CliError::Config("n_rep must be at least 1".into()));
        }
        if self.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("n_ladder must be strictly increasing".into()));
        }
        if self.n_ladder.contains(&0) {
            return Err(CliError::Config("n_ladder entries must be positive".into()));
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("formats must not be empty".into()));
        }
        if let Some(p) = &self.process {
            p.validate().map_err(|e| CliError::Config(format!("process: {e}")))?;
        }
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| CliError::Config(format!("grid: {e}")))?;
            if let (Some(m), Some(p)) = (&self.modulus, &self.process) {
                if p.dim() != g.x_point.len() {
                    return Err(CliError::Config("grid.x_point dimension differs from the process".into()));
                }
                m.holder_spec(g)?;
            }
        }
        if let Some(t) = &self.tail {
            if t.t_grid.is_empty() || t.t_grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(CliError::Config("tail.t_grid needs nonnegative finite values".into()));
            }
        }
        if let Some(s) = &self.stability {
            validate_stability(s)?;
        }
        Ok(())
    }

    pub fn process(&self) -> CliResult<&ProcessSpec> {
        self.process.as_ref().ok_or_else(|| CliError::Config("missing `process`".into()))
    }

    pub fn grid(&self) -> CliResult<&GridConfig> {
        self.grid.as_ref().ok_or_else(|| CliError::Config("missing `grid`".into()))
    }

    pub fn modulus(&self) -> CliResult<&ModulusConfig> {
        self.modulus.as_ref().ok_or_else(|| CliError::Config("missing `modulus`".into()))
    }

    pub fn ladder(&self) -> CliResult<&[usize]> {
        if self.n_ladder.is_empty() {
            return Err(CliError::Config("n_ladder must not be empty".into()));
        }
        Ok(&self.n_ladder)
    }

    /// The process with its stopping rule set for ladder entry `n`.
    pub fn process_at(&self, n: usize) -> CliResult<ProcessSpec> {
        let mut p = self.process()?.clone();
        p.stopping = match p.stopping {
            StoppingSpec::FixedN { .. } => StoppingSpec::FixedN { n },
            StoppingSpec::BudgetStop { cost, .. } => StoppingSpec::BudgetStop { cost, budget: n as f64 },
        };
        Ok(p)
    }
}

fn validate_stability(s: &StabilityConfig) -> CliResult<()> {
    if s.n_rep < 1 {
        return Err(CliError::Config("stability.n_rep must be at least 1".into()));
    }
    for (i, b) in s.blocks.iter().enumerate() {
        let noise = b.noise.spec()?;
        for &l in &b.lambdas {
            noise
                .check_lambda(l)
                .map_err(|e| CliError::Config(format!("stability block {i}: {e}")))?;
        }
        for stop in &b.stops {
            stop.validate().map_err(|e| CliError::Config(format!("stability block {i}: {e}")))?;
        }
        if b.a_values.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(CliError::Config(format!("stability block {i}: a must be positive")));
        }
        for u in &b.uniform {
            if !(u.a0 > 0.0 && u.a0 <= u.a1 && u.a1.is_finite()) {
                return Err(CliError::Config(format!("stability block {i}: need 0 < a0 <= a1")));
            }
            if noise.alpha != 2 {
                return Err(CliError::Config(format!("stability block {i}: the uniform bound needs alpha = 2")));
            }
        }
        if b.lambdas.is_empty() || b.scales.is_empty() || b.stops.is_empty() || (b.a_values.is_empty() && b.uniform.is_empty()) {
            return Err(CliError::Config(format!("stability block {i} has an empty axis")));
        }
    }
    Ok(())
}
