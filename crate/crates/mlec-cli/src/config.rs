//! TOML experiment configurations.
//!
//! A config declares exactly one experiment kind plus the parameter block of
//! that kind. Stochastic kinds (`simulate`, `mismatch`) must carry a seed,
//! either in the file or through `--seed`. Validation errors always name the
//! offending key.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config at `{key}`: {message}")]
    Validation { key: String, message: String },
}

impl ConfigError {
    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

pub const KINDS: &[&str] = &[
    "design",
    "census",
    "simulate",
    "optimize",
    "continuous",
    "mismatch",
];

/// Kinds whose results depend on random sampling and therefore need a seed.
pub const STOCHASTIC_KINDS: &[&str] = &["simulate", "mismatch"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census: Option<CensusConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<MismatchConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDef {
    pub input_symbols: Vec<String>,
    pub output_symbols: Vec<String>,
    pub degrees: usize,
    pub words: Vec<WordDef>,
}

/// A codeword written either as an array of labels or, when every output
/// label is a single character, as a compact string like `"ba"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordDef {
    Compact(String),
    Labels(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub code: CodeDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrees: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<u16>>>,
    /// Alternative to explicit points: use a codebook's words.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficacyDef {
    pub family: String,
    pub ceiling: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingDef {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl Default for CouplingDef {
    fn default() -> Self {
        CouplingDef {
            model: "independent".to_string(),
            initial: None,
            scale: None,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopDef {
    pub code: CodeDef,
    pub direction: String,
    pub error_rate: f64,
    pub detect_energy: f64,
    pub repair_cost: f64,
    pub efficacy: EfficacyDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub source_length: usize,
    pub trials: usize,
    /// Attach the analytic-model prediction and deviation to the report
    /// (one- and two-hop chains with independent detection costs).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub compare_with_model: bool,
    pub hops: Vec<HopDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelDef {
    pub upstream_repair_cost: f64,
    pub downstream_repair_cost: f64,
    pub upstream_bits: f64,
    pub downstream_bits: f64,
    #[serde(default)]
    pub downstream_base_cost: f64,
    #[serde(default)]
    pub transit_noise: f64,
    pub efficacy: EfficacyDef,
    #[serde(default)]
    pub coupling: CouplingDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDef {
    pub repair_cost: f64,
    pub bits: f64,
    pub efficacy: EfficacyDef,
    #[serde(default)]
    pub coupling: CouplingDef,
    #[serde(default)]
    pub base_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub error_rate: f64,
    pub k_max: f64,
    /// Samples of the exported energy curve (two-level runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_level: Option<TwoLevelDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LevelDef>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityDef {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDef {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDef {
    pub density: DensityDef,
    pub trajectory: TrajectoryDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousConfig {
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
    pub inputs: Vec<SignalDef>,
    /// Inputs to condition the output entropy on; defaults to none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_on: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MismatchConfig {
    pub source_length: usize,
    pub encoder: CodeDef,
    pub decoder: CodeDef,
}

impl ExperimentConfig {
    /// Parse and validate a config file; defaults are applied by serde.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !KINDS.contains(&self.kind.as_str()) {
            return Err(ConfigError::invalid(
                "kind",
                format!(
                    "unknown experiment kind `{}`; expected one of {}",
                    self.kind,
                    KINDS.join(", ")
                ),
            ));
        }
        let blocks: [(&str, bool); 6] = [
            ("design", self.design.is_some()),
            ("census", self.census.is_some()),
            ("simulate", self.simulate.is_some()),
            ("optimize", self.optimize.is_some()),
            ("continuous", self.continuous.is_some()),
            ("mismatch", self.mismatch.is_some()),
        ];
        for (name, present) in blocks {
            if name == self.kind && !present {
                return Err(ConfigError::invalid(
                    name,
                    format!("kind `{name}` requires a [{name}] block"),
                ));
            }
            if name != self.kind && present {
                return Err(ConfigError::invalid(
                    name,
                    format!("[{name}] block does not belong to kind `{}`", self.kind),
                ));
            }
        }
        if STOCHASTIC_KINDS.contains(&self.kind.as_str()) && self.seed.is_none() {
            return Err(ConfigError::invalid(
                "seed",
                format!("kind `{}` is stochastic and requires a seed", self.kind),
            ));
        }
        Ok(())
    }

    /// The config echoed into reports: the parsed structure serialised back
    /// to TOML after seed/trial overrides, so a report can be re-run
    /// verbatim.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
