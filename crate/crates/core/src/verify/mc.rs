use std::f64::consts::PI;

use rayon::prelude::*;

use super::oracle::max_at_most_probability;
use super::{scale_count, Mode, VerifyError, VerifyReport};
use crate::excursion::{induced_counts, Cap};
use crate::lil::{range_tag, RangeTag};
use crate::loglog;
use crate::rng::derive_seed;
use crate::stats::{bootstrap_ci, frequency, mean, quantile_sorted, sorted, std_error};
use crate::tracker::{DepthSpec, MultiDepthTracker};
use crate::walk::{generate_walk, Extrema, LocalTimeCounter};

/// Walks are keyed by trial index under one task name, so tests that share
/// `(seed, n)` see the same paths.
const WALK_TASK: &str = "mc-walk";
const RESAMPLES: usize = 400;
const LEVEL: f64 = 0.95;

#[derive(Clone, Debug, PartialEq)]
pub struct McParams {
    pub n: u64,
    pub k: u64,
    pub l: u64,
    pub nk_trials: u64,
    pub tkn_trials: u64,
    pub tkn_depths: Vec<u64>,
    pub tail_trials: u64,
    pub local_n: u64,
    pub local_trials: u64,
    pub ball_trials: u64,
    pub trend_ns: Vec<u64>,
    pub trend_trials: u64,
    pub d2: f64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            n: 1 << 20,
            k: 16,
            l: 8,
            nk_trials: 10_000,
            tkn_trials: 1000,
            tkn_depths: vec![4, 16, 64],
            tail_trials: 10_000,
            local_n: 1_000_000,
            local_trials: 10_000,
            ball_trials: 100_000,
            trend_ns: vec![1 << 16, 1 << 20, 1 << 24],
            trend_trials: 10_000,
            d2: 0.25,
        }
    }
}

impl McParams {
    pub fn scaled(mut self, scale: f64) -> Self {
        for t in [
            &mut self.nk_trials,
            &mut self.tkn_trials,
            &mut self.tail_trials,
            &mut self.local_trials,
            &mut self.ball_trials,
            &mut self.trend_trials,
        ] {
            *t = scale_count(*t, scale, 20);
        }
        self
    }
}

fn walk_seed(seed: u64, trial: u64) -> u64 {
    derive_seed(seed, WALK_TASK, trial)
}

fn boot_seed(seed: u64, test: &str) -> u64 {
    derive_seed(seed, &format!("bootstrap:{test}"), 0)
}

fn per_trial<T: Send>(trials: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..trials).into_par_iter().map(f).collect()
}

fn mc_report(test: &str, seed: u64, trials: usize) -> VerifyReport {
    let mut r = VerifyReport::new(test, Mode::MonteCarlo);
    r.seed = Some(seed);
    r.instances = trials as u64;
    r
}

/// Mean, standard error and the usual quantiles of `xs` into the summary.
fn describe(r: &mut VerifyReport, xs: &[f64]) -> Vec<f64> {
    let s = sorted(xs);
    r.stat("mean", mean(xs));
    r.stat("std_error", std_error(xs));
    for (name, q) in [("q005", 0.005), ("q05", 0.05), ("q50", 0.5), ("q95", 0.95), ("q995", 0.995)] {
        r.stat(name, quantile_sorted(&s, q));
    }
    r.stat("min", s[0]);
    r.stat("max", s[s.len() - 1]);
    s
}

/// `(N_k(n), down-steps of Y^(k))` per trial.
pub fn induced_samples(k: u64, n: u64, trials: u64, seed: u64) -> Vec<(u64, u64)> {
    per_trial(trials, |i| {
        let w = generate_walk(walk_seed(seed, i), n);
        induced_counts(&w.words(), n, k)
    })
}

/// Two-sided concentration of `N_k(n) k^2 / n` around its mean 1.
pub fn nk_concentration(k: u64, n: u64, trials: u64, seed: u64) -> Result<VerifyReport, VerifyError> {
    let steps: Vec<u64> = induced_samples(k, n, trials, seed).into_iter().map(|s| s.0).collect();
    nk_concentration_from(k, n, &steps, seed)
}

pub fn nk_concentration_from(k: u64, n: u64, steps: &[u64], seed: u64) -> Result<VerifyReport, VerifyError> {
    if k == 0 || k * k > n {
        return Err(VerifyError::Precondition(format!("need 1 <= k^2 <= n, got k={k}, n={n}")));
    }
    if steps.is_empty() {
        return Err(VerifyError::Precondition("no trials".into()));
    }
    let scale = (k * k) as f64 / n as f64;
    let xs: Vec<f64> = steps.iter().map(|&v| v as f64 * scale).collect();
    let mut r = mc_report("nk_concentration", seed, xs.len())
        .param("k", k as f64)
        .param("n", n as f64);
    let s = describe(&mut r, &xs);
    let (m, se) = (mean(&xs), std_error(&xs));
    let off = (m - 1.0).abs();
    r.check("mean_within_3se", off, "|mean - 1| <= 3 se", off <= 3.0 * se || off == 0.0);
    let outside = frequency(&xs, |v| !(0.3..=3.0).contains(&v));
    r.stat("freq_outside_0.3_3", outside);
    r.check("freq_outside_0.3_3", outside, "< 0.01", outside < 0.01);
    r.constant("c_lower", quantile_sorted(&s, 0.005));
    r.constant("C_upper", quantile_sorted(&s, 0.995));
    r.interval("mean", LEVEL, bootstrap_ci(&xs, mean, RESAMPLES, 1.0 - LEVEL, boot_seed(seed, "nk")));
    Ok(r.finish())
}

/// `T(k, n) k / n` against its mean 1/2.
pub fn tkn_concentration(k: u64, n: u64, trials: u64, seed: u64, d2: f64) -> Result<VerifyReport, VerifyError> {
    let downs: Vec<u64> = induced_samples(k, n, trials, seed).into_iter().map(|s| s.1).collect();
    tkn_concentration_from(k, n, &downs, seed, d2)
}

/// From per-trial lattice counts `sum_j T(k, jk, n)`.
pub fn tkn_concentration_from(k: u64, n: u64, lattice: &[u64], seed: u64, d2: f64) -> Result<VerifyReport, VerifyError> {
    if k == 0 || n == 0 || lattice.is_empty() {
        return Err(VerifyError::Precondition(format!("need k, n and trials positive, got k={k}, n={n}")));
    }
    let nf = n as f64;
    let limit = d2 * nf.sqrt() / (2.0 * loglog(nf).sqrt());
    let valid = (k as f64) <= limit;
    let xs: Vec<f64> = lattice.iter().map(|&v| (k * k * v) as f64 / nf).collect();
    let mut r = mc_report("tkn_concentration", seed, xs.len())
        .param("k", k as f64)
        .param("n", n as f64)
        .param("d2", d2)
        .param("valid", f64::from(u8::from(valid)));
    let s = describe(&mut r, &xs);
    let m = mean(&xs);
    let rel = (m / 0.5 - 1.0).abs();
    r.check("mean_within_10pct_of_half", m, "|mean / 0.5 - 1| <= 0.1", rel <= 0.1);
    r.constant("c1", quantile_sorted(&s, 0.005));
    r.constant("C1", quantile_sorted(&s, 0.995));
    r.interval("mean", LEVEL, bootstrap_ci(&xs, mean, RESAMPLES, 1.0 - LEVEL, boot_seed(seed, "tkn")));
    if !valid {
        r.note = Some(format!("k above the validity limit {limit:.2}"));
    }
    Ok(r.finish())
}

/// Per-trial aggregates of depth `k` used by the tail and truncation tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExcursionSample {
    pub max: u64,
    pub truncated: u64,
    pub plain: u64,
    pub lattice: u64,
    pub range: u64,
}

pub fn excursion_samples(k: u64, cap: Cap, n: u64, trials: u64, seed: u64) -> Vec<ExcursionSample> {
    per_trial(trials, |i| {
        let w = generate_walk(walk_seed(seed, i), n);
        let mut tr = MultiDepthTracker::new(&[DepthSpec::full(k, vec![cap])]);
        tr.advance(&w.words(), n);
        let snap = tr.snapshot();
        let d = snap.depth(k).expect("tracked depth");
        let truncated = match cap {
            Cap::Infinite => d.plain,
            Cap::Finite(0) => 0,
            c => d.truncated.iter().find(|(x, _)| *x == c).map_or(0, |(_, v)| *v),
        };
        ExcursionSample {
            max: d.max,
            truncated,
            plain: d.plain,
            lattice: d.lattice,
            range: tr.range(),
        }
    })
}

/// `max_x T(k, x, n) k / sqrt(n L)` and its 99.9th percentile.
pub fn max_excursion_tail(k: u64, n: u64, trials: u64, seed: u64) -> Result<VerifyReport, VerifyError> {
    let s = excursion_samples(k, Cap::Infinite, n, trials, seed);
    max_excursion_tail_from(k, n, &s, seed)
}

pub fn max_excursion_tail_from(k: u64, n: u64, samples: &[ExcursionSample], seed: u64) -> Result<VerifyReport, VerifyError> {
    if n < 16 || samples.len() < 2 {
        return Err(VerifyError::Precondition(format!("need n >= 16 and two trials, got n={n}")));
    }
    let nf = n as f64;
    let norm = k as f64 / (nf * loglog(nf)).sqrt();
    let xs: Vec<f64> = samples.iter().map(|s| s.max as f64 * norm).collect();
    let mut r = mc_report("max_excursion_tail", seed, xs.len())
        .param("k", k as f64)
        .param("n", n as f64);
    let s = describe(&mut r, &xs);
    let c_hat = quantile_sorted(&s, 0.999);
    r.constant("C", c_hat);
    r.check("C_finite", c_hat, "finite", c_hat.is_finite());
    let (first, second) = xs.split_at(xs.len() / 2);
    let c_half = quantile_sorted(&sorted(first), 0.999);
    let above = frequency(second, |v| v > 2.0 * c_half);
    r.constant("C_half", c_half);
    r.check("freq_above_2C_half", above, "< 0.005", above < 0.005);
    let q999 = |v: &[f64]| quantile_sorted(&sorted(v), 0.999);
    r.interval("C", LEVEL, bootstrap_ci(&xs, q999, RESAMPLES / 2, 1.0 - LEVEL, boot_seed(seed, "max")));
    Ok(r.finish())
}

/// Lower bands of `sum_x min(T(k, x, n), l)` on every trial and on range-high
/// trials.
pub fn truncated_sum_bounds(k: u64, l: Cap, n: u64, trials: u64, seed: u64) -> Result<VerifyReport, VerifyError> {
    let s = excursion_samples(k, l, n, trials, seed);
    truncated_sum_bounds_from(k, l, n, &s, seed)
}

pub fn truncated_sum_bounds_from(
    k: u64,
    l: Cap,
    n: u64,
    samples: &[ExcursionSample],
    seed: u64,
) -> Result<VerifyReport, VerifyError> {
    if n < 16 || samples.is_empty() {
        return Err(VerifyError::Precondition(format!("need n >= 16 and trials, got n={n}")));
    }
    let nf = n as f64;
    let ll = loglog(nf);
    let lf = match l {
        Cap::Finite(v) => v as f64,
        Cap::Infinite => f64::INFINITY,
    };
    let mut r = mc_report("truncated_sum_bounds", seed, samples.len())
        .param("k", k as f64)
        .param("l", lf)
        .param("n", n as f64);
    let cross: Vec<f64> = samples.iter().map(|s| s.plain as f64 * k as f64 / nf).collect();
    let lattice: Vec<f64> = samples.iter().map(|s| (k * k * s.lattice) as f64 / nf).collect();
    r.stat("plain_sum_over_n_k_mean", mean(&cross));
    r.stat("T_k_n_over_n_k_mean", mean(&lattice));
    if l == Cap::Finite(0) {
        r.note = Some("cap 0: every sum is 0, nothing to fit".into());
        return Ok(r.finish());
    }
    let d_all = (nf / k as f64).min((nf / ll).sqrt() * lf);
    let xs: Vec<f64> = samples.iter().map(|s| s.truncated as f64 / d_all).collect();
    let s = describe(&mut r, &xs);
    let c2 = quantile_sorted(&s, 0.005);
    r.constant("c2", c2);
    r.constant("C2", quantile_sorted(&s, 0.995));
    r.check("c2_positive", c2, "> 0", c2 > 0.0);
    let q005 = |v: &[f64]| quantile_sorted(&sorted(v), 0.005);
    r.interval("c2", LEVEL, bootstrap_ci(&xs, q005, RESAMPLES / 2, 1.0 - LEVEL, boot_seed(seed, "c2")));
    let d_high = (nf / k as f64).min((nf * ll).sqrt() * lf);
    let high: Vec<f64> = samples
        .iter()
        .filter(|s| range_tag(s.range, n) == RangeTag::High)
        .map(|s| s.truncated as f64 / d_high)
        .collect();
    r.stat("range_high_trials", high.len() as f64);
    if !high.is_empty() {
        r.constant("c3", quantile_sorted(&sorted(&high), 0.005));
    }
    Ok(r.finish())
}

/// Survival of `L(n) / sqrt(n)` at `u = 0..5` with a fitted `C u^2 exp(-C' u^2)`.
pub fn local_time_tail(n: u64, trials: u64, seed: u64) -> Result<VerifyReport, VerifyError> {
    if n < 10_000 || trials == 0 {
        return Err(VerifyError::Precondition(format!("need n >= 10^4 and trials, got n={n}")));
    }
    let samples: Vec<(u64, u64)> = per_trial(trials, |i| {
        let w = generate_walk(walk_seed(seed, i), n);
        let mut c = LocalTimeCounter::new();
        c.feed(&w.words(), 0, n);
        (c.max(), Extrema::scan(&w.words(), n).range())
    });
    let root = (n as f64).sqrt();
    let xs: Vec<f64> = samples.iter().map(|&(l, _)| l as f64 / root).collect();
    let mut r = mc_report("local_time_tail", seed, xs.len()).param("n", n as f64);
    // pigeonhole: some site is visited at least (n + 1) / range times
    r.violations = samples
        .iter()
        .filter(|&&(l, range)| l < (n + 1).div_ceil(range))
        .count() as u64;
    let s = describe(&mut r, &xs);
    let p99 = quantile_sorted(&s, 0.99);
    r.stat("q99", p99);
    r.check("q99_below_6", p99, "< 6", p99 < 6.0);
    let surv: Vec<f64> = (0..=5).map(|u| frequency(&xs, |v| v >= u as f64)).collect();
    for (u, p) in surv.iter().enumerate() {
        r.stat(&format!("survival_u{u}"), *p);
    }
    // drops of the log survival grow between successive probes from u = 2
    let drop = |u: usize| {
        if surv[u] == 0.0 {
            f64::INFINITY
        } else {
            surv[u].ln() - surv[u + 1].ln()
        }
    };
    let shape = (2..4).all(|u| drop(u + 1) >= drop(u));
    r.check("log_survival_convex_from_u2", f64::from(u8::from(shape)), "= 1", shape);
    let pts: Vec<(f64, f64)> = (1..=5)
        .filter(|&u| surv[u] > 0.0)
        .map(|u| {
            let u = u as f64;
            (u * u, (surv[u as usize] / (u * u)).ln())
        })
        .collect();
    if pts.len() >= 2 {
        let (slope, icept) = least_squares(&pts);
        r.constant("C", icept.exp());
        r.constant("C_prime", -slope);
    }
    r.interval("q99", LEVEL, bootstrap_ci(&xs, |v| quantile_sorted(&sorted(v), 0.99), RESAMPLES / 2, 1.0 - LEVEL, boot_seed(seed, "local")));
    Ok(r.finish())
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `(max S, max |S|)` over the first `n` steps of each trial.
fn maxima(n: u64, trials: u64, seed: u64) -> Vec<(i64, i64)> {
    per_trial(trials, |i| {
        let w = generate_walk(walk_seed(seed, i), n);
        let e = Extrema::scan(&w.words(), n);
        (e.max, e.max.max(-e.min))
    })
}

fn ball_threshold(n: u64) -> Option<f64> {
    let ll = loglog(n as f64);
    (ll > 1.0).then(|| PI / 4.0 * (n as f64 / ll).sqrt())
}

/// `P(max S <= (pi/4) sqrt(n / L))` against the 5% gate, next to its exact
/// value.
pub fn min_max_small_ball(n: u64, trials: u64, seed: u64) -> Result<VerifyReport, VerifyError> {
    let mut r = mc_report("min_max_small_ball", seed, trials as usize).param("n", n as f64);
    let Some(thr) = ball_threshold(n) else {
        r.note = Some("log log n <= 1: probe skipped".into());
        r.instances = 0;
        return Ok(r.finish());
    };
    if trials == 0 {
        return Err(VerifyError::Precondition("no trials".into()));
    }
    let m = maxima(n, trials, seed);
    let hits: Vec<f64> = m.iter().map(|&(up, _)| f64::from(u8::from(up as f64 <= thr))).collect();
    let two: Vec<f64> = m.iter().map(|&(_, abs)| f64::from(u8::from(abs as f64 <= thr))).collect();
    let p = mean(&hits);
    let exact = max_at_most_probability(n, thr.floor() as i64);
    let ln3 = (n as f64).ln().powi(3);
    r.stat("threshold", thr);
    r.stat("p", p);
    r.stat("p_exact", exact);
    r.stat("p_two_sided", mean(&two));
    r.constant("c_prime", p * ln3);
    r.constant("c_prime_two_sided", mean(&two) * ln3);
    r.check("p_below_5pct", p, "< 0.05", p < 0.05);
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    r.check("p_matches_exact", (p - exact).abs(), "<= 4 se", (p - exact).abs() <= 4.0 * se);
    r.interval("p", LEVEL, bootstrap_ci(&hits, mean, RESAMPLES, 1.0 - LEVEL, boot_seed(seed, "ball")));
    r.note = Some(format!(
        "exact P(max S <= {}) = {exact:.4} at n = {n}",
        thr.floor()
    ));
    Ok(r.finish())
}

/// The small-ball probability along a grid of `n`, which should not rise.
pub fn small_ball_trend(ns: &[u64], trials: u64, seed: u64) -> Result<VerifyReport, VerifyError> {
    let mut r = mc_report("min_max_small_ball_trend", seed, trials as usize);
    let mut prev: Option<(f64, f64, f64)> = None;
    let (mut trend_ok, mut exact_ok) = (true, true);
    for &n in ns {
        let Some(thr) = ball_threshold(n) else { continue };
        let m = maxima(n, trials, seed);
        let p = frequency(&m.iter().map(|&(up, _)| up as f64).collect::<Vec<_>>(), |v| v <= thr);
        let exact = max_at_most_probability(n, thr.floor() as i64);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        r.stat(&format!("p_n{n}"), p);
        r.stat(&format!("p_exact_n{n}"), exact);
        if let Some((pp, pse, pe)) = prev {
            trend_ok &= p <= pp + 3.0 * (se * se + pse * pse).sqrt();
            exact_ok &= exact < pe;
        }
        prev = Some((p, se, exact));
    }
    r.check("nonincreasing_within_3se", f64::from(u8::from(trend_ok)), "= 1", trend_ok);
    r.check("exact_decreasing", f64::from(u8::from(exact_ok)), "= 1", exact_ok);
    Ok(r.finish())
}

pub fn mc_suite(p: &McParams, seed: u64) -> Result<Vec<VerifyReport>, VerifyError> {
    let mut out = Vec::new();
    let shared = induced_samples(p.k, p.n, p.nk_trials, seed);
    let steps: Vec<u64> = shared.iter().map(|s| s.0).collect();
    out.push(nk_concentration_from(p.k, p.n, &steps, seed)?);
    for &k in &p.tkn_depths {
        let lattice: Vec<u64> = if k == p.k {
            shared.iter().take(p.tkn_trials as usize).map(|s| s.1).collect()
        } else {
            induced_samples(k, p.n, p.tkn_trials, seed).into_iter().map(|s| s.1).collect()
        };
        let mut r = tkn_concentration_from(k, p.n, &lattice, seed, p.d2)?;
        r.test = format!("tkn_concentration_k{k}");
        out.push(r);
    }
    let samples = excursion_samples(p.k, Cap::Finite(p.l), p.n, p.tail_trials, seed);
    out.push(max_excursion_tail_from(p.k, p.n, &samples, seed)?);
    out.push(truncated_sum_bounds_from(p.k, Cap::Finite(p.l), p.n, &samples, seed)?);
    out.push(local_time_tail(p.local_n, p.local_trials, seed)?);
    out.push(min_max_small_ball(p.n, p.ball_trials, seed)?);
    out.push(small_ball_trend(&p.trend_ns, p.trend_trials, seed)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_depth_is_degenerate() {
        let r = nk_concentration(1, 4096, 30, 5).unwrap();
        assert_eq!(r.summary["mean"], 1.0);
        assert_eq!(r.summary["std_error"], 0.0);
        assert!(r.passed);
    }

    #[test]
    fn shared_trials_agree() {
        let (k, n) = (8, 1 << 14);
        let a = induced_samples(k, n, 40, 9);
        let b = excursion_samples(k, Cap::Infinite, n, 40, 9);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.1, y.lattice);
            assert_eq!(y.truncated, y.plain);
        }
    }

    #[test]
    fn small_n_probe_is_skipped() {
        let r = min_max_small_ball(15, 10, 0).unwrap();
        assert!(r.passed && r.instances == 0);
    }

    #[test]
    fn zero_cap_is_not_fitted() {
        let r = truncated_sum_bounds(4, Cap::Finite(0), 1 << 10, 20, 1).unwrap();
        assert!(r.passed && r.constants.is_empty());
    }

    #[test]
    fn reports_are_reproducible() {
        let a = local_time_tail(10_000, 30, 4).unwrap();
        let b = local_time_tail(10_000, 30, 4).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.violations, 0);
    }
}
