use std::path::Path;

use serde::{Deserialize, Serialize};

use recurrence_lab::systems::IntervalMap;
use recurrence_lab::{PotentialSpec, SystemSpec};

use crate::CliError;

/// Identifier of the only RNG stream the tool supports; configs naming
/// anything else are rejected so old outputs stay comparable.
pub const RNG_ID: &str = "chacha8";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    FullShift { probs: Vec<f64> },
    CircleExpanding { degree: u32 },
    TorusConformal { degree: u32, dim: usize },
    Interval { map: IntervalMapConfig },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMapConfig {
    Tent,
    Logistic4,
    PiecewiseLinear { slopes: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_rate_abs")]
    pub rate_abs: f64,
    #[serde(default = "default_min_rate_abs")]
    pub min_rate_abs: f64,
    #[serde(default = "default_entropy_rel")]
    pub entropy_rel: f64,
}

fn default_rate_abs() -> f64 {
    0.1
}
fn default_min_rate_abs() -> f64 {
    0.15
}
fn default_entropy_rel() -> f64 {
    0.07
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rate_abs: default_rate_abs(),
            min_rate_abs: default_min_rate_abs(),
            entropy_rel: default_entropy_rel(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub seed: u64,
    #[serde(default = "default_rng")]
    pub rng: String,
    pub orbit_len: usize,
    pub sample_count: usize,
    pub n_ladder: Vec<usize>,
    pub eps_ladder: Vec<f64>,
    /// Metric-ball radii for the local-rate estimators; defaults to the eps
    /// ladder.
    #[serde(default)]
    pub r_ladder: Vec<f64>,
    /// Mass captured by the Katok covering counts.
    #[serde(default = "default_katok_mass")]
    pub katok_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

fn default_rng() -> String {
    RNG_ID.to_string()
}
fn default_katok_mass() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.rng != RNG_ID {
            return Err(CliError::Config(format!(
                "unsupported rng '{}', expected '{RNG_ID}'",
                self.rng
            )));
        }
        if self.sample_count == 0 {
            return Err(CliError::Config("sample_count must be at least 1".into()));
        }
        if self.n_ladder.is_empty() || self.n_ladder[0] == 0 {
            return Err(CliError::Config("n_ladder must be nonempty and positive".into()));
        }
        if self.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("n_ladder must be strictly increasing".into()));
        }
        if self.eps_ladder.is_empty() || self.eps_ladder.iter().any(|&e| !(e > 0.0)) {
            return Err(CliError::Config("eps_ladder must be nonempty and positive".into()));
        }
        if self.eps_ladder.windows(2).any(|w| w[0] <= w[1]) {
            return Err(CliError::Config("eps_ladder must be strictly decreasing".into()));
        }
        if !self.r_ladder.is_empty()
            && (self.r_ladder.iter().any(|&e| !(e > 0.0))
                || self.r_ladder.windows(2).any(|w| w[0] <= w[1]))
        {
            return Err(CliError::Config(
                "r_ladder must be strictly decreasing and positive".into(),
            ));
        }
        let n_max = *self.n_ladder.last().unwrap();
        if self.orbit_len <= n_max + 10 {
            return Err(CliError::Config(format!(
                "orbit_len must exceed max(n_ladder) + 10 = {}",
                n_max + 10
            )));
        }
        if !(self.katok_mass > 0.0 && self.katok_mass < 1.0) {
            return Err(CliError::Config("katok_mass must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn radii(&self) -> &[f64] {
        if self.r_ladder.is_empty() {
            &self.eps_ladder
        } else {
            &self.r_ladder
        }
    }

    pub fn system(&self) -> Result<SystemSpec, CliError> {
        let spec = match &self.system {
            SystemConfig::FullShift { probs } => SystemSpec::full_shift(probs.clone(), self.seed),
            SystemConfig::CircleExpanding { degree } => SystemSpec::circle(*degree, self.seed),
            SystemConfig::TorusConformal { degree, dim } => {
                SystemSpec::torus(*degree, *dim, self.seed)
            }
            SystemConfig::Interval { map } => {
                let m = match map {
                    IntervalMapConfig::Tent => IntervalMap::Tent,
                    IntervalMapConfig::Logistic4 => IntervalMap::Logistic4,
                    IntervalMapConfig::PiecewiseLinear { slopes } => IntervalMap::PiecewiseLinear {
                        slopes: slopes.clone(),
                    },
                };
                SystemSpec::interval(m, self.seed)
            }
        };
        spec.map_err(|e| CliError::Config(e.to_string()))
    }
}
