use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn walklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walklab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn sha256(p: &Path) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(std::fs::read(p).unwrap()))
}

#[test]
fn build_layers_powers_of_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = walklab(&["build-layers", "--f", "powerlaw:0.75", "--m0", "2", "--xmax", "1e18", "--out-dir", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let layers = read_json(&dir.path().join("layers.json"));
    let k = layers["k"].as_array().unwrap();
    assert_eq!(k.len(), 16);
    for (s, v) in k.iter().enumerate() {
        assert_eq!(v.as_u64(), Some(1 << s));
        assert_eq!(layers["l"][s].as_u64(), Some(1 << s));
    }
    let m = read_json(&dir.path().join("build-layers.manifest.json"));
    assert_eq!(m["outputs"][0]["path"], "layers.json");
    assert_eq!(m["outputs"][0]["sha256"].as_str().unwrap(), sha256(&dir.path().join("layers.json")));
    assert_eq!(m["config"]["m0"], 2.0);
}

#[test]
fn linear_speed_has_infinite_l() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = walklab(&["build-layers", "--f", "powerlaw:1", "--xmax", "1e12", "--out-dir", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let layers = read_json(&dir.path().join("layers.json"));
    assert_eq!(layers["l"][1], "inf");
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = walklab(&["lil", "--n-max", "4096", "--out-dir", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--f"), "{}", stderr(&o));

    let cfg = dir.path().join("zero.json");
    std::fs::write(&cfg, r#"{"f": "powerlaw:0.75", "n_max": 4096, "trials": 0}"#).unwrap();
    let o = walklab(&["lil", "--config", cfg.to_str().unwrap(), "--out-dir", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/trials"), "{}", stderr(&o));

    let cfg = dir.path().join("unknown.json");
    std::fs::write(&cfg, r#"{"f": "powerlaw:0.75", "n_max": 4096, "layers_typo": 1}"#).unwrap();
    let o = walklab(&["lil", "--config", cfg.to_str().unwrap(), "--out-dir", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/layers_typo"), "{}", stderr(&o));

    let cfg = dir.path().join("schema.json");
    std::fs::write(&cfg, r#"{"f": "powerlaw:0.75", "n_max": "many"}"#).unwrap();
    let o = walklab(&["lil", "--config", cfg.to_str().unwrap(), "--out-dir", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/n_max"), "{}", stderr(&o));

    let o = walklab(&["lil", "--f", "powerlaw:0.75", "--layers", "x.json", "--n-max", "64"]);
    assert_eq!(code(&o), 2);
    let o = walklab(&["build-layers", "--f", "powerlaw:0.75"]);
    assert_eq!(code(&o), 2);
    let o = walklab(&["build-layers", "--f", "cubic:3", "--xmax", "100", "--out-dir", out]);
    assert_eq!(code(&o), 2);
    let o = walklab(&["verify", "--suite", "some"]);
    assert_eq!(code(&o), 2);
    let o = walklab(&["simulate", "--n", "100", "--threads", "0", "--out-dir", out]);
    assert_eq!(code(&o), 2);
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = walklab(&["simulate", "--n", "100", "--out-dir", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn lil_is_thread_independent_and_replays() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = |dir: &Path, threads: &str| {
        let o = walklab(&[
            "lil", "--f", "powerlaw:0.75", "--n-max", "65536", "--trials", "4", "--seed", "11",
            "--threads", threads, "--out-dir", dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    args(a.path(), "1");
    args(b.path(), "3");
    for f in ["records.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let header = std::fs::read_to_string(a.path().join("records.csv")).unwrap();
    assert!(header.starts_with(
        "trial,m,n,range,s0,s0p,s1,s2,s3,s3t,D_up,D_lo,g,h,fs_limsup,fs_liminf,r_up_g,r_lo_h,tag\n"
    ));
    let manifest = a.path().join("lil.manifest.json");
    let m = read_json(&manifest);
    assert_eq!(m["seed"], 11);
    assert_eq!(m["derived_seeds"].as_array().unwrap().len(), 4);
    let o = walklab(&["replay", manifest.to_str().unwrap(), "--out-dir", c.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        sha256(&c.path().join("records.csv")),
        m["outputs"][0]["sha256"].as_str().unwrap()
    );
}

#[test]
fn config_round_trip_through_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("min.json");
    std::fs::write(&cfg, r#"{"f": "powerlaw:0.75", "n_max": 1024, "trials": 2}"#).unwrap();
    let out = dir.path().join("o");
    let o = walklab(&["lil", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let resolved = read_json(&out.join("lil.manifest.json"))["config"].clone();
    assert_eq!(resolved["m0"], 2.0);
    assert_eq!(resolved["r"], 0.125);
    assert_eq!(resolved["burn_in"], 10);
    let again = dir.path().join("resolved.json");
    std::fs::write(&again, resolved.to_string()).unwrap();
    let out2 = dir.path().join("o2");
    let o = walklab(&["lil", "--config", again.to_str().unwrap(), "--out-dir", out2.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read_json(&out2.join("lil.manifest.json"))["config"], resolved);
    assert_eq!(sha256(&out.join("records.csv")), sha256(&out2.join("records.csv")));
}

#[test]
fn simulate_writes_tallies_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = walklab(&[
        "simulate", "--n", "4096", "--trials", "3", "--k", "2,8", "--f", "powerlaw:0.75", "--out-dir", out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let walks = std::fs::read_to_string(dir.path().join("walks.csv")).unwrap();
    assert_eq!(walks.lines().count(), 4);
    assert!(walks.starts_with("trial,seed,n,final_position,min,max,range\n"));
    let tallies = std::fs::read_to_string(dir.path().join("tallies.csv")).unwrap();
    assert!(tallies.starts_with("trial,k,n,x,count\n"));
    let aggs = read_json(&dir.path().join("aggregates.json"));
    assert_eq!(aggs.as_array().unwrap().len(), 6);
    // T_weighted is k times the tally entries on the lattice kZ
    for a in aggs.as_array().unwrap() {
        let (trial, k) = (a["trial"].as_u64().unwrap(), a["k"].as_u64().unwrap() as i64);
        let lattice: u64 = tallies
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse::<i64>().unwrap()).collect::<Vec<_>>())
            .filter(|r| r[0] as u64 == trial && r[1] == k && r[3].rem_euclid(k) == 0)
            .map(|r| r[4] as u64)
            .sum();
        assert_eq!(a["T_weighted"].as_u64().unwrap(), k as u64 * lattice);
    }
    let bounds = std::fs::read_to_string(dir.path().join("layer_bounds.csv")).unwrap();
    assert!(bounds.starts_with("trial,n,s,k_s,l_s,upper,lower_proxy,valid\n"));
}

#[test]
fn verify_exact_reports_the_failing_bound() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, threads: &str| {
        walklab(&[
            "verify", "--suite", "exact", "--scale", "0.01", "--threads", threads, "--out-dir",
            dir.to_str().unwrap(),
        ])
    };
    let o = run(a.path(), "1");
    // the literal lower side of the induced-walk sandwich has counterexamples
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let report = read_json(&a.path().join("report.json"));
    let failed: Vec<&str> = report["reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["passed"] == false)
        .map(|r| r["test"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["sandwich_lower"]);
    assert_eq!(code(&run(b.path(), "2")), 1);
    assert_eq!(sha256(&a.path().join("report.json")), sha256(&b.path().join("report.json")));
    let m = read_json(&a.path().join("verify.manifest.json"));
    assert_eq!(m["exit_code"], 1);
}
