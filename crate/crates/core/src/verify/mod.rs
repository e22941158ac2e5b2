//! Independent oracles, exact identity checks over enumerated and random
//! paths, and Monte Carlo gates with fitted constants.

mod exact;
mod mc;
mod oracle;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::excursion::ExcursionError;

pub use exact::{
    exact_suite, induced_walk_identity, inequality_suite, oracle_equivalence, reflection_identity_check,
    walk_invariants, ExactParams,
};
pub use mc::{
    excursion_samples, induced_samples, local_time_tail, max_excursion_tail, max_excursion_tail_from,
    mc_suite, min_max_small_ball, nk_concentration, nk_concentration_from, small_ball_trend,
    tkn_concentration, tkn_concentration_from, truncated_sum_bounds, truncated_sum_bounds_from,
    ExcursionSample, McParams,
};
pub use oracle::{
    brute_force_excursions, max_at_most_probability, reflection_counts, reflection_threshold,
    ReflectionCounts, ENUMERATION_LIMIT,
};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("path length {n} exceeds the enumeration limit {limit}")]
    TooLarge { n: u32, limit: u32 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Excursion(#[from] ExcursionError),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

/// One explicit pass criterion of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the statistic is not finite.
    pub value: Option<f64>,
    pub bound: String,
    pub passed: bool,
}

/// Bootstrap interval for one statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub stat: String,
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub test: String,
    pub mode: Mode,
    pub instances: u64,
    pub violations: u64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Fitted empirical constants.
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    /// Distribution summary: means, quantiles, frequencies.
    #[serde(default)]
    pub summary: BTreeMap<String, f64>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub ci: Vec<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl VerifyReport {
    pub fn new(test: &str, mode: Mode) -> Self {
        VerifyReport {
            test: test.to_string(),
            mode,
            instances: 0,
            violations: 0,
            passed: false,
            seed: None,
            params: BTreeMap::new(),
            constants: BTreeMap::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
            ci: Vec::new(),
            counterexample: None,
            note: None,
        }
    }

    pub fn param(mut self, name: &str, v: f64) -> Self {
        if let Some(v) = finite(v) {
            self.params.insert(name.into(), v);
        }
        self
    }

    pub fn constant(&mut self, name: &str, v: f64) {
        if let Some(v) = finite(v) {
            self.constants.insert(name.into(), v);
        }
    }

    pub fn stat(&mut self, name: &str, v: f64) {
        if let Some(v) = finite(v) {
            self.summary.insert(name.into(), v);
        }
    }

    pub fn check(&mut self, name: &str, value: f64, bound: &str, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            value: finite(value),
            bound: bound.into(),
            passed,
        });
    }

    pub fn interval(&mut self, stat: &str, level: f64, [lo, hi]: [f64; 2]) {
        self.ci.push(Interval {
            stat: stat.into(),
            level,
            lo,
            hi,
        });
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Sets `passed`: no violations and every check met.
    pub fn finish(mut self) -> Self {
        self.passed = self.violations == 0 && self.checks.iter().all(|c| c.passed);
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Exact,
    Mc,
    #[default]
    All,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Suite::Exact),
            "mc" => Ok(Suite::Mc),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite {other:?}; expected exact, mc or all")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Exact => "exact",
            Suite::Mc => "mc",
            Suite::All => "all",
        })
    }
}

fn default_scale() -> f64 {
    1.0
}

/// What `verify` runs. `scale` multiplies Monte Carlo trial counts and the
/// sizes of the random path corpora; enumerations are unaffected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default)]
    pub suite: Suite,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            suite: Suite::All,
            seed: 0,
            scale: 1.0,
        }
    }
}

impl VerifySpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(ConfigError::invalid("/scale", "scale must be positive and finite"));
        }
        Ok(())
    }
}

/// All reports of one `verify` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub scale: f64,
    pub passed: bool,
    pub reports: Vec<VerifyReport>,
}

impl SuiteReport {
    pub fn get(&self, test: &str) -> Option<&VerifyReport> {
        self.reports.iter().find(|r| r.test == test)
    }

    pub fn failed(&self) -> impl Iterator<Item = &VerifyReport> {
        self.reports.iter().filter(|r| !r.passed)
    }
}

pub fn run_suite(spec: &VerifySpec, threads: Option<usize>) -> Result<SuiteReport, VerifyError> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| VerifyError::Pool(e.to_string()))?;
    pool.install(|| {
        let mut reports = Vec::new();
        if matches!(spec.suite, Suite::Exact | Suite::All) {
            reports.extend(exact_suite(&ExactParams::default().scaled(spec.scale), spec.seed)?);
        }
        if matches!(spec.suite, Suite::Mc | Suite::All) {
            reports.extend(mc_suite(&McParams::default().scaled(spec.scale), spec.seed)?);
        }
        Ok(SuiteReport {
            suite: spec.suite,
            seed: spec.seed,
            scale: spec.scale,
            passed: reports.iter().all(|r| r.passed),
            reports,
        })
    })
}

/// Scale a count, keeping at least `floor`.
fn scale_count(n: u64, scale: f64, floor: u64) -> u64 {
    ((n as f64 * scale).ceil() as u64).max(floor)
}
