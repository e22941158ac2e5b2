//! Multi-trial experiments over an exponential checkpoint grid, comparing
//! distance bounds with the scaling functions `g`, `h` and the `f`-based
//! scalings.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::distance::{
    half_depth, lower_cap, pair_proxy, total_upper, DistanceConstants, DistanceError,
};
use crate::excursion::ExcursionSource;
use crate::layers::{
    build_layers_covering, critical_layers, scaling_from_f, scaling_g_at, scaling_h_at,
    LayerError, LayerParams, ScalingMode, SpeedFunction,
};
use crate::loglog;
use crate::rng::{derive_seed, StreamKey};
use crate::tracker::{DepthSpec, MultiDepthTracker, TrackerSnapshot};
use crate::walk::Words;

/// Task name folded into trial seeds.
pub const LIL_TASK: &str = "lil";

#[derive(Debug, Error)]
pub enum LilError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error("no records at or after the burn-in checkpoint")]
    Empty,
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_records")]
    pub records: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

fn default_records() -> String {
    "records.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            records: default_records(),
            summary: default_summary(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub n_max: u64,
    #[serde(default = "default_base")]
    pub checkpoint_base: f64,
    /// Speed function; layers are built from it unless given explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<SpeedFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<LayerParams>,
    #[serde(default = "default_m0")]
    pub m0: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "default_d2")]
    pub d2: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: u32,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_trials() -> u64 {
    8
}
fn default_base() -> f64 {
    2.0
}
fn default_m0() -> f64 {
    2.0
}
fn default_r() -> f64 {
    0.125
}
fn one() -> f64 {
    1.0
}
fn default_d2() -> f64 {
    0.25
}
fn default_burn_in() -> u32 {
    10
}

impl ExperimentConfig {
    /// Defaults for everything but the horizon and speed function.
    pub fn new(f: SpeedFunction, n_max: u64) -> Self {
        ExperimentConfig {
            seed: 0,
            trials: default_trials(),
            n_max,
            checkpoint_base: default_base(),
            f: Some(f),
            layers: None,
            m0: default_m0(),
            r: default_r(),
            sigma: 1.0,
            c0: 1.0,
            d2: default_d2(),
            burn_in: default_burn_in(),
            outputs: Outputs::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |p: &str, m: &str| Err(ConfigError::invalid(p, m));
        if self.trials < 1 {
            return bad("/trials", "must be at least 1");
        }
        if self.n_max < 16 {
            return bad("/n_max", "must be at least 16");
        }
        if !(self.checkpoint_base > 1.0 && self.checkpoint_base.is_finite()) {
            return bad("/checkpoint_base", "must exceed 1");
        }
        if !(self.m0 > 1.0 && self.m0.is_finite()) {
            return bad("/m0", "must exceed 1");
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return bad("/r", "must lie in (0, 1]");
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad("/sigma", "must lie in (0, 1]");
        }
        if !(self.c0 > 0.0 && self.c0 <= 1.0) {
            return bad("/c0", "must lie in (0, 1]");
        }
        if !(self.d2 > 0.0 && self.d2.is_finite()) {
            return bad("/d2", "must be positive");
        }
        if self.f.is_none() && self.layers.is_none() {
            return bad("/", "one of f or layers is required");
        }
        if let Some(l) = &self.layers {
            l.validate()
                .map_err(|e| ConfigError::invalid("/layers", e.to_string()))?;
        }
        Ok(())
    }

    pub fn constants(&self) -> DistanceConstants {
        DistanceConstants {
            sigma: self.sigma,
            c0: self.c0,
            d2: self.d2,
        }
    }

    pub fn trial_seed(&self, trial: u64) -> u64 {
        derive_seed(self.seed, LIL_TASK, trial)
    }
}

/// `(m, t_m)` for `t_m = floor(base^m)` with `16 <= t_m <= n_max`, strictly
/// increasing in `m`.
pub fn checkpoints(base: f64, n_max: u64) -> Vec<(u32, u64)> {
    let mut out: Vec<(u32, u64)> = Vec::new();
    let int_base = (base.fract() == 0.0).then_some(base as u64);
    for m in 0u32.. {
        let t = match int_base {
            Some(b) => match b.checked_pow(m) {
                Some(t) => t,
                None => break,
            },
            None => {
                let t = base.powi(m as i32).floor();
                if t > n_max as f64 {
                    break;
                }
                t as u64
            }
        };
        if t > n_max {
            break;
        }
        if t >= 16 && out.last().is_none_or(|&(_, p)| t > p) {
            out.push((m, t));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeTag {
    Low,
    High,
    Neutral,
}

/// Low when `range <= 2 sqrt(n / L)`, else high when `range >= sqrt(n L) / 4`.
/// The two overlap for small `n`; low wins.
pub fn range_tag(range: u64, n: u64) -> RangeTag {
    let nf = n as f64;
    let ll = loglog(nf);
    let r = range as f64;
    if r <= 2.0 * (nf / ll).sqrt() {
        RangeTag::Low
    } else if r >= 0.25 * (nf * ll).sqrt() {
        RangeTag::High
    } else {
        RangeTag::Neutral
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilRecord {
    pub trial: u64,
    pub m: u32,
    pub n: u64,
    pub range: u64,
    pub s0: usize,
    pub s0p: usize,
    pub s1: usize,
    pub s2: usize,
    pub s3: usize,
    pub s3t: usize,
    #[serde(rename = "D_up")]
    pub d_up: f64,
    #[serde(rename = "D_lo")]
    pub d_lo: f64,
    pub g: f64,
    pub h: f64,
    pub fs_limsup: f64,
    pub fs_liminf: f64,
    pub r_up_g: f64,
    pub r_lo_h: f64,
    pub tag: RangeTag,
}

pub const RECORD_COLUMNS: &str =
    "trial,m,n,range,s0,s0p,s1,s2,s3,s3t,D_up,D_lo,g,h,fs_limsup,fs_liminf,r_up_g,r_lo_h,tag";

/// Where the `f`-based scalings come from.
#[derive(Clone, Debug)]
enum Scaler {
    Speed(SpeedFunction),
    Surrogate,
}

/// Everything fixed before the first step: layers, depths, checkpoints.
#[derive(Clone, Debug)]
pub struct Plan {
    pub layers: LayerParams,
    pub checkpoints: Vec<(u32, u64)>,
    pub depths: Vec<DepthSpec>,
    scaler: Scaler,
}

pub fn plan(cfg: &ExperimentConfig) -> Result<Plan, LilError> {
    cfg.validate()?;
    let layers = match (&cfg.layers, &cfg.f) {
        (Some(l), _) => {
            let last = l.k.last().unwrap();
            if !l.is_closed() && last.to_f64() <= (cfg.n_max + 1) as f64 {
                return Err(LayerError::Horizon(format!(
                    "last k_s = {last} does not exceed n_max + 1 = {}",
                    cfg.n_max + 1
                ))
                .into());
            }
            l.clone()
        }
        (None, Some(f)) => build_layers_covering(f, cfg.m0, cfg.n_max)?,
        (None, None) => unreachable!("validated"),
    };
    let scaler = match (&cfg.f, &layers.source) {
        (Some(f), _) => Scaler::Speed(f.clone()),
        (None, Some(src)) => Scaler::Speed(SpeedFunction::parse(src)?),
        (None, None) => Scaler::Surrogate,
    };
    let mut depths = Vec::new();
    for s in 0..layers.len() {
        let k = &layers.k[s];
        let Some(kv) = k.to_u64().filter(|&v| v <= cfg.n_max + 1) else {
            continue;
        };
        depths.push(DepthSpec::lattice(half_depth(k).unwrap()));
        depths.push(DepthSpec {
            depth: kv,
            caps: vec![lower_cap(&layers.l[s], cfg.c0, cfg.n_max)],
            keep_counts: false,
        });
    }
    Ok(Plan {
        layers,
        checkpoints: checkpoints(cfg.checkpoint_base, cfg.n_max),
        depths,
        scaler,
    })
}

fn f_scaling(plan: &Plan, n: u64, mode: ScalingMode) -> Result<f64, LilError> {
    match &plan.scaler {
        Scaler::Speed(f) => Ok(scaling_from_f(f, n, mode)?),
        Scaler::Surrogate => {
            let nf = n as f64;
            let ll = loglog(nf);
            Ok(match mode {
                ScalingMode::Limsup => ll * plan.layers.fbar(nf / ll)?,
                ScalingMode::Liminf => plan.layers.fbar(nf * ll)? / ll,
            })
        }
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 && b.is_finite() {
        a / b
    } else {
        0.0
    }
}

/// The record of one checkpoint from the tracker state at `t_m`.
pub fn record_at(
    cfg: &ExperimentConfig,
    plan: &Plan,
    trial: u64,
    m: u32,
    snap: &TrackerSnapshot,
) -> Result<LilRecord, LilError> {
    let p = &plan.layers;
    let n = snap.n;
    let range = snap.range();
    let cl = critical_layers(p, n, cfg.r, Some(range))?;
    let (d_up, s0) = total_upper(snap, p)?;
    let d_lo = pair_proxy(snap, p, cl.s3_tilde, &cfg.constants())?;
    let g = scaling_g_at(p, &cl)?;
    let h = scaling_h_at(p, &cl)?;
    Ok(LilRecord {
        trial,
        m,
        n,
        range,
        s0,
        s0p: cl.s0_prime,
        s1: cl.s1,
        s2: cl.s2,
        s3: cl.s3,
        s3t: cl.s3_tilde,
        d_up,
        d_lo,
        g,
        h,
        fs_limsup: f_scaling(plan, n, ScalingMode::Limsup)?,
        fs_liminf: f_scaling(plan, n, ScalingMode::Liminf)?,
        r_up_g: ratio(d_up, g),
        r_lo_h: ratio(d_lo, h),
        tag: range_tag(range, n),
    })
}

/// All checkpoints of one trial, from a single pass over its walk.
pub fn run_trial(cfg: &ExperimentConfig, plan: &Plan, trial: u64) -> Result<Vec<LilRecord>, LilError> {
    let words = Words::Key(StreamKey::new(cfg.trial_seed(trial), 0));
    let mut tracker = MultiDepthTracker::new(&plan.depths);
    let mut out = Vec::with_capacity(plan.checkpoints.len());
    for &(m, t) in &plan.checkpoints {
        tracker.advance(&words, t);
        out.push(record_at(cfg, plan, trial, m, &tracker.snapshot())?);
    }
    Ok(out)
}

pub struct Experiment {
    pub plan: Plan,
    pub records: Vec<LilRecord>,
}

/// Run every trial, in parallel on `threads` workers (all cores when
/// `None`). Records come back ordered by `(trial, m)` whatever the
/// scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Experiment, LilError> {
    let plan = plan(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| LilError::Pool(e.to_string()))?;
    let per_trial: Vec<Vec<LilRecord>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &plan, t))
            .collect::<Result<_, _>>()
    })?;
    Ok(Experiment {
        plan,
        records: per_trial.into_iter().flatten().collect(),
    })
}

pub fn records_csv(records: &[LilRecord]) -> Result<String, LilError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        return Ok(format!("{RECORD_COLUMNS}\n"));
    }
    let bytes = w.into_inner().map_err(|e| LilError::Pool(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_records_csv(text: &str) -> Result<Vec<LilRecord>, LilError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Running extrema of one ratio across trials, by checkpoint index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioBand {
    pub name: String,
    pub m: Vec<u32>,
    pub running_sup: Vec<Option<f64>>,
    pub running_inf: Vec<Option<f64>>,
    pub sup: Option<f64>,
    pub inf: Option<f64>,
    pub samples: usize,
}

impl RatioBand {
    fn at(&self, m: u32) -> (Option<f64>, Option<f64>) {
        match self.m.iter().position(|&x| x == m) {
            Some(i) => (self.running_sup[i], self.running_inf[i]),
            None => (None, None),
        }
    }
}

/// Checks on the ratio bands over the last and middle thirds of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    pub middle_end: u32,
    pub last_end: u32,
    /// running sup of D_up/g at the end of the middle and last thirds
    pub up_g_middle: Option<f64>,
    pub up_g_last: Option<f64>,
    pub up_g_growth: Option<f64>,
    /// running inf of D_lo/h over range-low checkpoints, same thirds
    pub lo_h_low_middle: Option<f64>,
    pub lo_h_low_last: Option<f64>,
    pub lo_h_low_retained: Option<f64>,
    /// smallest K with fs_limsup/g and fs_liminf/h inside [1/K, K]
    pub k_band: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub burn_in: u32,
    pub records: usize,
    pub ratios: Vec<RatioBand>,
    pub tag_counts: BTreeMap<String, usize>,
    pub flatness: Flatness,
}

impl BandSummary {
    pub fn ratio(&self, name: &str) -> Option<&RatioBand> {
        self.ratios.iter().find(|r| r.name == name)
    }
}

type Extract = fn(&LilRecord) -> Option<f64>;

const RATIOS: &[(&str, Extract)] = &[
    ("D_up/g", |r| Some(r.r_up_g)),
    ("D_lo/h", |r| Some(r.r_lo_h)),
    ("D_lo/h@low", |r| (r.tag == RangeTag::Low).then_some(r.r_lo_h)),
    ("fs_limsup/g", |r| Some(ratio(r.fs_limsup, r.g))),
    ("fs_liminf/h", |r| Some(ratio(r.fs_liminf, r.h))),
    ("D_up/fs_limsup", |r| Some(ratio(r.d_up, r.fs_limsup))),
    ("D_lo/fs_liminf", |r| Some(ratio(r.d_lo, r.fs_liminf))),
];

fn band(name: &str, ms: &[u32], recs: &[&LilRecord], get: Extract) -> RatioBand {
    let mut sup: Option<f64> = None;
    let mut inf: Option<f64> = None;
    let mut running_sup = Vec::with_capacity(ms.len());
    let mut running_inf = Vec::with_capacity(ms.len());
    let mut samples = 0;
    for &m in ms {
        for v in recs.iter().filter(|r| r.m == m).filter_map(|r| get(r)) {
            samples += 1;
            sup = Some(sup.map_or(v, |s| s.max(v)));
            inf = Some(inf.map_or(v, |s| s.min(v)));
        }
        running_sup.push(sup);
        running_inf.push(inf);
    }
    RatioBand {
        name: name.to_string(),
        m: ms.to_vec(),
        running_sup,
        running_inf,
        sup,
        inf,
        samples,
    }
}

fn quotient(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    }
}

/// Per-ratio running extrema over checkpoints `m >= burn_in`, pooled across
/// trials.
pub fn band_summary(records: &[LilRecord], burn_in: u32) -> Result<BandSummary, LilError> {
    let recs: Vec<&LilRecord> = records.iter().filter(|r| r.m >= burn_in).collect();
    if recs.is_empty() {
        return Err(LilError::Empty);
    }
    let mut ms: Vec<u32> = recs.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let ratios: Vec<RatioBand> = RATIOS
        .iter()
        .map(|(name, get)| band(name, &ms, &recs, *get))
        .collect();
    let mut tag_counts = BTreeMap::new();
    for r in &recs {
        let key = serde_json::to_value(r.tag).unwrap().as_str().unwrap().to_string();
        *tag_counts.entry(key).or_insert(0) += 1;
    }
    let third = |j: usize| ms[(ms.len() * j).div_ceil(3).saturating_sub(1).min(ms.len() - 1)];
    let (middle_end, last_end) = (third(2), third(3));
    let find = |n: &str| ratios.iter().find(|r| r.name == n).unwrap();
    let (up_mid, _) = find("D_up/g").at(middle_end);
    let (up_last, _) = find("D_up/g").at(last_end);
    let (_, lo_mid) = find("D_lo/h@low").at(middle_end);
    let (_, lo_last) = find("D_lo/h@low").at(last_end);
    let mut k_band: f64 = 1.0;
    for r in &recs {
        for v in [ratio(r.fs_limsup, r.g), ratio(r.fs_liminf, r.h)] {
            k_band = k_band.max(v).max(if v > 0.0 { 1.0 / v } else { f64::INFINITY });
        }
    }
    Ok(BandSummary {
        burn_in,
        records: recs.len(),
        flatness: Flatness {
            middle_end,
            last_end,
            up_g_middle: up_mid,
            up_g_last: up_last,
            up_g_growth: quotient(up_last, up_mid),
            lo_h_low_middle: lo_mid,
            lo_h_low_last: lo_last,
            lo_h_low_retained: quotient(lo_last, lo_mid),
            k_band,
        },
        ratios,
        tag_counts,
    })
}

/// Checkpoints grouped by range regime, as `(trial, m)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeMarks {
    pub low: Vec<(u64, u32)>,
    pub high: Vec<(u64, u32)>,
    pub neutral: Vec<(u64, u32)>,
}

pub fn extremal_time_marks(records: &[LilRecord]) -> TimeMarks {
    let mut marks = TimeMarks::default();
    for r in records {
        let slot = match range_tag(r.range, r.n) {
            RangeTag::Low => &mut marks.low,
            RangeTag::High => &mut marks.high,
            RangeTag::Neutral => &mut marks.neutral,
        };
        slot.push((r.trial, r.m));
    }
    marks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid() {
        assert_eq!(checkpoints(2.0, 16), vec![(4, 16)]);
        assert_eq!(checkpoints(2.0, 15), vec![]);
        let g = checkpoints(2.0, 1 << 30);
        assert_eq!(g.len(), 27);
        assert_eq!(g.last(), Some(&(30, 1 << 30)));
        let h = checkpoints(1.5, 100);
        assert!(h.windows(2).all(|w| w[1].1 > w[0].1));
        assert_eq!(h.first().unwrap().1, 17);
    }

    #[test]
    fn tags() {
        let n = 1 << 10;
        assert_eq!(range_tag(n + 1, n), RangeTag::High);
        assert_eq!(range_tag(2, n), RangeTag::Low);
    }

    fn rec(m: u32, v: f64) -> LilRecord {
        LilRecord {
            trial: 0,
            m,
            n: 1 << m,
            range: 1,
            s0: 0,
            s0p: 0,
            s1: 0,
            s2: 0,
            s3: 0,
            s3t: 0,
            d_up: v,
            d_lo: v,
            g: 1.0,
            h: 1.0,
            fs_limsup: 1.0,
            fs_liminf: 1.0,
            r_up_g: v,
            r_lo_h: v,
            tag: RangeTag::Low,
        }
    }

    #[test]
    fn summary_running_extrema() {
        let s = band_summary(&[rec(10, 1.0), rec(11, 2.0), rec(12, 3.0)], 10).unwrap();
        let b = s.ratio("D_up/g").unwrap();
        assert_eq!(b.running_sup, vec![Some(1.0), Some(2.0), Some(3.0)]);
        assert_eq!(b.running_inf, vec![Some(1.0), Some(1.0), Some(1.0)]);
        let one = band_summary(&[rec(12, 0.7)], 10).unwrap();
        let b = one.ratio("D_up/g").unwrap();
        assert_eq!((b.sup, b.inf), (Some(0.7), Some(0.7)));
        assert!(matches!(band_summary(&[], 10), Err(LilError::Empty)));
        assert!(matches!(band_summary(&[rec(3, 1.0)], 10), Err(LilError::Empty)));
    }

    #[test]
    fn minimal_config_defaults() {
        let cfg: ExperimentConfig =
            crate::config::from_json_str(r#"{"f": "powerlaw:0.75", "n_max": 1048576}"#).unwrap();
        assert_eq!((cfg.m0, cfg.r, cfg.trials), (2.0, 0.125, 8));
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = crate::config::from_json_str(&text).unwrap();
        assert_eq!(back, cfg);
        let zero: ExperimentConfig =
            crate::config::from_json_str(r#"{"f": "powerlaw:0.75", "n_max": 64, "trials": 0}"#).unwrap();
        assert!(zero.validate().is_err());
        let none: ExperimentConfig = crate::config::from_json_str(r#"{"n_max": 64}"#).unwrap();
        assert!(none.validate().is_err());
        assert!(crate::config::from_json_str::<ExperimentConfig>(r#"{"n_max": 64, "bogus": 1}"#).is_err());
    }

    #[test]
    fn small_run_is_deterministic() {
        let mut cfg = ExperimentConfig::new(SpeedFunction::power_law(0.75), 1 << 12);
        cfg.trials = 3;
        let a = run_experiment(&cfg, Some(1)).unwrap();
        let b = run_experiment(&cfg, Some(3)).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(records_csv(&a.records).unwrap(), records_csv(&b.records).unwrap());
        assert_eq!(a.records.len(), 3 * 9);
        let csv = records_csv(&a.records).unwrap();
        assert_eq!(csv.lines().next().unwrap(), RECORD_COLUMNS);
        assert_eq!(parse_records_csv(&csv).unwrap(), a.records);
    }

    #[test]
    fn n_max_16_gives_one_record() {
        let mut cfg = ExperimentConfig::new(SpeedFunction::power_law(0.75), 16);
        cfg.trials = 1;
        let e = run_experiment(&cfg, Some(1)).unwrap();
        assert_eq!(e.records.len(), 1);
        assert_eq!(e.records[0].n, 16);
    }
}
