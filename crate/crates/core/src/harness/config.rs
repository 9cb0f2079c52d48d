//! Scenario configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::law::{BranchingLaw, Regime, RegimeReport};
use crate::tail::{DEFAULT_MIN_EXCEEDANCES, MIN_RESAMPLES};

pub const SCHEMA_VERSION: u32 = 1;

/// Which tail drives the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominant {
    /// `P(R > x) ~ H P(Z_N > x)`.
    #[serde(rename = "ZN")]
    Zn,
    /// `P(R > x) ~ P(Q > x) / (1 - rho_alpha)`.
    #[serde(rename = "Q")]
    Q,
    /// One-shot sums `sum_i C_i X_i + Q` against the tail of `X`.
    #[serde(rename = "SUM_APPENDIX")]
    SumAppendix,
}

impl std::fmt::Display for Dominant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dominant::Zn => "ZN",
            Dominant::Q => "Q",
            Dominant::SumAppendix => "SUM_APPENDIX",
        })
    }
}

fn default_epsilon() -> f64 {
    0.1
}
fn default_level() -> f64 {
    0.95
}
fn default_min_exceedances() -> usize {
    DEFAULT_MIN_EXCEEDANCES
}
fn default_hill_tolerance() -> f64 {
    0.2
}
fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// Pool means of `W_n` and `R^(n)` against `E[Q] rho^n` and
/// `E[Q] (1 - rho^(n+1)) / (1 - rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanCheckConfig {
    #[serde(default = "MeanCheckConfig::default_generations")]
    pub generations: u32,
    #[serde(default = "MeanCheckConfig::default_sigma")]
    pub sigma: f64,
}

impl MeanCheckConfig {
    fn default_generations() -> u32 {
        10
    }
    fn default_sigma() -> f64 {
        4.0
    }
}

impl Default for MeanCheckConfig {
    fn default() -> Self {
        Self {
            generations: Self::default_generations(),
            sigma: Self::default_sigma(),
        }
    }
}

/// Geometric decay of `max_x P(W_n > x) / P(den > x)` over `n` in `[from, to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCheckConfig {
    #[serde(default = "DecayCheckConfig::default_from")]
    pub from: u32,
    #[serde(default = "DecayCheckConfig::default_to")]
    pub to: u32,
    /// Allowed excess of the fitted rate over `(1 + rho v rho_alpha) / 2`.
    #[serde(default = "DecayCheckConfig::default_slack")]
    pub slack: f64,
    #[serde(default = "DecayCheckConfig::default_r2")]
    pub min_r_squared: f64,
}

impl DecayCheckConfig {
    fn default_from() -> u32 {
        2
    }
    fn default_to() -> u32 {
        8
    }
    fn default_slack() -> f64 {
        0.05
    }
    fn default_r2() -> f64 {
        0.9
    }
}

impl Default for DecayCheckConfig {
    fn default() -> Self {
        Self {
            from: Self::default_from(),
            to: Self::default_to(),
            slack: Self::default_slack(),
            min_r_squared: Self::default_r2(),
        }
    }
}

/// Forgetting of the initial condition by the fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointCheckConfig {
    #[serde(default = "FixedPointCheckConfig::default_steps")]
    pub steps: u32,
    /// Constant starting pools; the first two are compared.
    #[serde(default = "FixedPointCheckConfig::default_initial")]
    pub initial_values: Vec<f64>,
    #[serde(default = "FixedPointCheckConfig::default_threshold")]
    pub ks_threshold: f64,
    /// Distances must be nonincreasing from this step on.
    #[serde(default = "FixedPointCheckConfig::default_monotone")]
    pub monotone_after: u32,
}

impl FixedPointCheckConfig {
    fn default_steps() -> u32 {
        15
    }
    fn default_initial() -> Vec<f64> {
        vec![0.0, 100.0]
    }
    fn default_threshold() -> f64 {
        0.01
    }
    fn default_monotone() -> u32 {
        3
    }
}

impl Default for FixedPointCheckConfig {
    fn default() -> Self {
        Self {
            steps: Self::default_steps(),
            initial_values: Self::default_initial(),
            ks_threshold: Self::default_threshold(),
            monotone_after: Self::default_monotone(),
        }
    }
}

/// Optional diagnostics run alongside the tail comparison.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<MeanCheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayCheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointCheckConfig>,
}

/// One verification scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub name: String,
    pub law: BranchingLaw,
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub dominant: Dominant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_dist: Option<DistributionSpec>,
    pub pool_size: usize,
    pub depth: u32,
    #[serde(rename = "bootstrap_B")]
    pub bootstrap_b: usize,
    #[serde(default = "default_level")]
    pub bootstrap_level: f64,
    pub quantile_grid: Vec<f64>,
    #[serde(default = "default_min_exceedances")]
    pub min_exceedances: usize,
    /// Grid points whose band must contain the constant; defaults to half
    /// the grid, rounded up.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_band_hits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hill_k: Option<usize>,
    #[serde(default = "default_hill_tolerance")]
    pub hill_tolerance: f64,
    #[serde(default)]
    pub checks: Checks,
    pub seed: u64,
    /// Worker threads the run is sharded across; all cores when absent.
    /// Every sample has its own stream, so this changes scheduling only,
    /// never the output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn min_band_hits(&self) -> usize {
        self.min_band_hits
            .unwrap_or(self.quantile_grid.len().div_ceil(2))
    }

    /// Schema checks that need no sampling.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.law.validate()?;
        if self.pool_size < 2 {
            return Err(bad("pool_size must be at least 2"));
        }
        if self.bootstrap_b < MIN_RESAMPLES {
            return Err(bad(format!("bootstrap_B must be at least {MIN_RESAMPLES}")));
        }
        if !(self.bootstrap_level > 0.0 && self.bootstrap_level < 1.0) {
            return Err(bad("bootstrap_level must lie in (0, 1)"));
        }
        if self.quantile_grid.is_empty()
            || self.quantile_grid.iter().any(|p| !(*p > 0.0 && *p < 0.5))
        {
            return Err(bad(
                "quantile_grid must be nonempty with entries in (0, 0.5)",
            ));
        }
        if self.min_band_hits() > self.quantile_grid.len() {
            return Err(bad("min_band_hits exceeds the grid size"));
        }
        if self.replicas == Some(0) {
            return Err(bad("replicas must be positive"));
        }
        if let Some(fp) = &self.checks.fixed_point {
            if fp.initial_values.len() < 2 {
                return Err(bad("fixed_point.initial_values needs two starting values"));
            }
        }
        if let Some(d) = &self.checks.decay {
            if d.to < d.from + 3 {
                return Err(bad("decay range must cover at least 4 generations"));
            }
        }
        match (self.dominant, &self.x_dist) {
            (Dominant::SumAppendix, None) => return Err(bad("SUM_APPENDIX scenarios need x_dist")),
            (Dominant::SumAppendix, Some(x)) => {
                x.validate()?;
                if self.checks != Checks::default() {
                    return Err(bad("SUM_APPENDIX scenarios take no pool checks"));
                }
            }
            (_, Some(_)) => return Err(bad("x_dist is only used by SUM_APPENDIX scenarios")),
            _ => {}
        }
        Ok(())
    }

    /// Regime of the law, required to match `dominant`.
    pub fn check_regime(&self) -> Result<RegimeReport> {
        let report = self.law.validate_regime(self.alpha, self.epsilon);
        let ok = match self.dominant {
            Dominant::Zn => report.regime == Regime::ZnDominates,
            Dominant::Q => report.regime == Regime::QDominates,
            Dominant::SumAppendix => {
                matches!(report.regime, Regime::ZnDominates | Regime::QDominates)
            }
        };
        if !ok {
            let detail = if report.violated_hypotheses.is_empty() {
                String::new()
            } else {
                format!(": {}", report.violated_hypotheses.join("; "))
            };
            return Err(Error::RegimeMismatch(format!(
                "scenario `{}` expects {} but the law is {}{detail}",
                self.name, self.dominant, report.regime
            )));
        }
        Ok(report)
    }
}
