//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 1 6`.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use walklab::layers::{build_layers, LayerValue};
use walklab::lil::{band_summary, records_csv, run_experiment, ExperimentConfig};
use walklab::verify::{
    induced_samples, inequality_suite, local_time_tail, nk_concentration_from, oracle_equivalence,
    reflection_identity_check, tkn_concentration_from, ExactParams, VerifyReport,
};
use walklab::{Completion, SpeedFunction};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(limit: Duration, elapsed: Duration) -> (bool, String) {
    (elapsed < limit, format!("{:.1}s of {}s", elapsed.as_secs_f64(), limit.as_secs()))
}

fn violations(r: &VerifyReport) -> String {
    match &r.counterexample {
        Some(c) => format!("{}: {} violations in {} ({c})", r.test, r.violations, r.instances),
        None => format!("{}: 0 violations in {}", r.test, r.instances),
    }
}

fn check_value(r: &VerifyReport, name: &str) -> (bool, String) {
    let c = r.get_check(name).unwrap_or_else(|| panic!("{} has no check {name}", r.test));
    let v = c.value.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    (c.passed, format!("{name} = {v} ({})", c.bound))
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let r = reflection_identity_check(&[1, 2, 3], &[1, 2], 16, Completion::Returned).unwrap();
    let (fast, time) = within(Duration::from_secs(120), t.elapsed());
    outcome(
        r.passed && r.violations == 0 && fast,
        format!("{}; {time}", violations(&r)),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let p = ExactParams {
        exhaustive_len: 12,
        oracle_paths: 1000,
        oracle_len: 1000,
        oracle_depths: vec![1, 2, 3, 4],
        ..ExactParams::default()
    };
    let r = oracle_equivalence(&p, SEED);
    let (fast, time) = within(Duration::from_secs(120), t.elapsed());
    outcome(r.violations == 0 && fast, format!("{}; {time}", violations(&r)))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let p = ExactParams {
        exhaustive_len: 12,
        inequality_paths: 10_000,
        inequality_len: 1000,
        inequality_depths: vec![2, 4, 8],
        ..ExactParams::default()
    };
    let reports = inequality_suite(&p, SEED);
    let (fast, time) = within(Duration::from_secs(300), t.elapsed());
    let gated = ["sandwich_lower", "sandwich_upper", "prop51_lower", "prop51_upper", "lemma52"];
    let mut ok = fast;
    let mut parts = Vec::new();
    for r in reports.iter().filter(|r| gated.contains(&r.test.as_str())) {
        ok &= r.violations == 0;
        parts.push(violations(r));
    }
    if let Some(r) = reports.iter().find(|r| r.test == "sandwich_lower_aligned") {
        parts.push(format!("[informational] {}", violations(r)));
    }
    parts.push(time);
    outcome(ok, parts.join("; "))
}

/// `N_16(2^20)` and `T(16, 2^20)` samples shared by criteria 4 and 5.
fn nk_samples() -> &'static Vec<(u64, u64)> {
    static S: OnceLock<Vec<(u64, u64)>> = OnceLock::new();
    S.get_or_init(|| induced_samples(16, 1 << 20, 10_000, SEED))
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let (k, n) = (16, 1u64 << 20);
    let s = nk_samples();
    let steps: Vec<u64> = s.iter().map(|v| v.0).collect();
    let lattice: Vec<u64> = s.iter().map(|v| v.1).collect();
    let nk = nk_concentration_from(k, n, &steps, SEED).unwrap();
    let tk = tkn_concentration_from(k, n, &lattice, SEED, 0.25).unwrap();
    let (a, da) = check_value(&nk, "mean_within_3se");
    let (b, db) = check_value(&tk, "mean_within_10pct_of_half");
    let (fast, time) = within(Duration::from_secs(300), t.elapsed());
    outcome(
        a && b && fast,
        format!(
            "N_k k^2/n mean {:.4} (se {:.4}), {da}; T k/n {db}; {} trials; {time}",
            nk.summary["mean"], nk.summary["std_error"], steps.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let steps: Vec<u64> = nk_samples().iter().map(|v| v.0).collect();
    let nk = nk_concentration_from(16, 1 << 20, &steps, SEED).unwrap();
    let (a, da) = check_value(&nk, "freq_outside_0.3_3");
    let lt = local_time_tail(1_000_000, 10_000, SEED).unwrap();
    let (b, db) = check_value(&lt, "q99_below_6");
    let (fast, time) = within(Duration::from_secs(1800), t.elapsed());
    outcome(a && b && fast, format!("N_k {da}; L(n)/sqrt(n) {db}; {time}"))
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let (m0, x_max) = (2.0, 1e18);
    let mut ok = true;
    let mut parts = Vec::new();
    let p = build_layers(&SpeedFunction::power_law(0.75), m0, x_max).unwrap();
    let pow2 = (0..p.len()).all(|s| {
        let want = LayerValue::from_u64(1 << s);
        p.k[s] == want && p.l[s] == want
    });
    ok &= pow2;
    parts.push(format!("x^0.75: k_s = l_s = 2^s for s < {} ({pow2})", p.len()));
    for alpha in [0.6, 0.75, 0.9] {
        let f = SpeedFunction::power_law(alpha);
        let p = build_layers(&f, m0, x_max).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..200 {
            let x = x_max.powf(i as f64 / 199.0);
            let r = f.eval(x) / p.fbar(x).unwrap();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let band = lo >= 1.0 / (2.0 * m0) && hi <= 2.0 * m0;
        let growth = p.validate().is_ok() && p.min_growth() >= m0;
        let idx = p.loglog_index();
        let loglog = (idx..p.len()).all(|s| match (&p.k[s], &p.l[s]) {
            (LayerValue::Infinite, _) => false,
            (_, LayerValue::Infinite) => true,
            (k, l) => k.to_f64().ln().ln() <= l.to_f64(),
        });
        ok &= band && growth && loglog;
        parts.push(format!(
            "alpha {alpha}: f/fbar in [{lo:.3}, {hi:.3}], min growth {:.3}, loglog index {idx} of {}",
            p.min_growth(),
            p.len()
        ));
    }
    let (fast, time) = within(Duration::from_secs(60), t.elapsed());
    parts.push(time);
    outcome(ok && fast, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::new(SpeedFunction::power_law(0.75), 1 << 30);
    cfg.trials = 20;
    cfg.seed = SEED;
    let exp = run_experiment(&cfg, None).unwrap();
    let s = band_summary(&exp.records, cfg.burn_in).unwrap();
    let f = &s.flatness;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    let a = f.up_g_growth.is_some_and(|g| g < 2.0);
    let b = f.lo_h_low_last.is_some_and(|v| v > 0.0)
        && f.lo_h_low_middle.is_some_and(|v| v > 0.0)
        && f.lo_h_low_retained.is_some_and(|v| v > 0.5);
    let c = f.k_band < 8.0;
    let (fast, time) = within(Duration::from_secs(3600), t.elapsed());
    outcome(
        a && b && c && fast,
        format!(
            "(a) sup D_up/g middle {} last {} growth {} < 2: {a}; (b) inf D_lo/h at range-low middle {} last {} retained {} > 0.5: {b}; (c) K = {:.3} < 8: {c}; {} records; {time}",
            fmt(f.up_g_middle),
            fmt(f.up_g_last),
            fmt(f.up_g_growth),
            fmt(f.lo_h_low_middle),
            fmt(f.lo_h_low_last),
            fmt(f.lo_h_low_retained),
            f.k_band,
            exp.records.len()
        ),
    )
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let mc = |threads| {
        in_pool(threads, || {
            let s = induced_samples(16, 1 << 16, 200, SEED);
            let steps: Vec<u64> = s.iter().map(|v| v.0).collect();
            let lattice: Vec<u64> = s.iter().map(|v| v.1).collect();
            let a = nk_concentration_from(16, 1 << 16, &steps, SEED).unwrap();
            let b = tkn_concentration_from(16, 1 << 16, &lattice, SEED, 0.25).unwrap();
            serde_json::to_string(&(a, b)).unwrap()
        })
    };
    let lil = |threads| {
        let mut cfg = ExperimentConfig::new(SpeedFunction::power_law(0.75), 1 << 18);
        cfg.trials = 4;
        cfg.seed = SEED;
        let exp = run_experiment(&cfg, Some(threads)).unwrap();
        let summary = band_summary(&exp.records, cfg.burn_in).unwrap();
        (records_csv(&exp.records).unwrap(), serde_json::to_string_pretty(&summary).unwrap())
    };
    let mc_same = mc(1) == mc(3) && mc(1) == mc(1);
    let lil_same = lil(1) == lil(3) && lil(2) == lil(1);
    let (fast, time) = within(Duration::from_secs(300), t.elapsed());
    outcome(
        mc_same && lil_same && fast,
        format!("criterion-4 reports identical across 1/3 threads: {mc_same}; lil CSV and summary identical across 1/2/3 threads: {lil_same}; {time}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "reflection identity", criterion_1),
        (2, "oracle equivalence", criterion_2),
        (3, "inequality suite", criterion_3),
        (4, "mean laws", criterion_4),
        (5, "concentration gates", criterion_5),
        (6, "layer builder", criterion_6),
        (7, "LIL band flatness", criterion_7),
        (8, "determinism", criterion_8),
    ];
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (id, name, _) in criteria {
            println!("criterion_{id} ({name}): test");
        }
        return ExitCode::SUCCESS;
    }
    let wanted: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let o = run();
        let mark = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {id} [{mark}] {name}: {}", o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
