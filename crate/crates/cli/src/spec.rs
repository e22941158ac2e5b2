//! Configuration documents owned by the command-line tool.

use serde::{Deserialize, Serialize};
use walklab::config::ConfigError;
use walklab::SpeedFunction;

fn two() -> f64 {
    2.0
}

fn layers_json() -> String {
    "layers.json".into()
}

/// Input of `build-layers`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerBuildSpec {
    pub f: SpeedFunction,
    #[serde(default = "two")]
    pub m0: f64,
    pub x_max: f64,
    #[serde(default = "layers_json")]
    pub out: String,
}

impl LayerBuildSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.m0 > 1.0 && self.m0.is_finite()) {
            return Err(ConfigError::invalid("/m0", "must exceed 1"));
        }
        if !(self.x_max >= 1.0 && self.x_max.is_finite()) {
            return Err(ConfigError::invalid("/x_max", "must be finite and at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOutputs {
    #[serde(default = "walks_csv")]
    pub walks: String,
    #[serde(default = "tallies_csv")]
    pub tallies: String,
    #[serde(default = "aggregates_json")]
    pub aggregates: String,
    #[serde(default = "bounds_csv")]
    pub layer_bounds: String,
}

fn walks_csv() -> String {
    "walks.csv".into()
}
fn tallies_csv() -> String {
    "tallies.csv".into()
}
fn aggregates_json() -> String {
    "aggregates.json".into()
}
fn bounds_csv() -> String {
    "layer_bounds.csv".into()
}

impl Default for SimulateOutputs {
    fn default() -> Self {
        SimulateOutputs {
            walks: walks_csv(),
            tallies: tallies_csv(),
            aggregates: aggregates_json(),
            layer_bounds: bounds_csv(),
        }
    }
}

fn one() -> u64 {
    1
}

/// Input of `simulate`: walk summaries, and for each depth in `k` the
/// excursion tallies; per-layer distance bounds when `f` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(default)]
    pub seed: u64,
    pub n: u64,
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default)]
    pub k: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<SpeedFunction>,
    #[serde(default = "two")]
    pub m0: f64,
    #[serde(default)]
    pub outputs: SimulateOutputs,
}

impl SimulateSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials < 1 {
            return Err(ConfigError::invalid("/trials", "must be at least 1"));
        }
        if let Some(i) = self.k.iter().position(|&k| k == 0) {
            return Err(ConfigError::invalid(&format!("/k/{i}"), "depths must be positive"));
        }
        if self.f.is_some() && self.n < 16 {
            return Err(ConfigError::invalid("/n", "layer bounds need n >= 16"));
        }
        if !(self.m0 > 1.0 && self.m0.is_finite()) {
            return Err(ConfigError::invalid("/m0", "must exceed 1"));
        }
        Ok(())
    }
}
