mod manifest;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use walklab::config::{from_json_str, load_json, ConfigError};
use walklab::distance::{layer_table, DistanceConstants, LAYER_CSV_HEADER};
use walklab::excursion::{excursion_field, PathStats};
use walklab::layers::{build_layers, build_layers_covering, LayerError, LayerParams};
use walklab::lil::{band_summary, records_csv, run_experiment, ExperimentConfig, LilError, LIL_TASK};
use walklab::rng::derive_seed;
use walklab::verify::{run_suite, Suite, VerifyError, VerifySpec};
use walklab::walk::generate_walk;

use manifest::{manifest_name, now, write_output, DerivedSeed, OutputDigest, RunManifest, SEED_RULE};
use spec::{LayerBuildSpec, SimulateSpec};

const SIMULATE_TASK: &str = "simulate";

#[derive(Parser, Debug)]
#[command(name = "walklab", version, about = "Random walk excursion statistics, layer models and LIL experiments")]
struct Cli {
    /// Master seed; overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// JSON config for the subcommand; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate walks and write summaries, excursion tallies and layer bounds.
    Simulate {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Excursion depths, comma separated.
        #[arg(long, value_delimiter = ',')]
        k: Vec<u64>,
        /// Speed function for per-layer distance bounds.
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        m0: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Build the layer sequences (k_s, l_s) for a speed function.
    BuildLayers {
        /// powerlaw:ALPHA or table:PATH, optionally followed by ;eps=V
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        m0: Option<f64>,
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a LIL experiment over the checkpoint grid.
    Lil {
        #[arg(long, conflicts_with = "layers")]
        f: Option<String>,
        /// layers.json written by build-layers.
        #[arg(long)]
        layers: Option<PathBuf>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        summary: Option<String>,
    },
    /// Run the exact and Monte Carlo verification suites.
    Verify {
        #[arg(long)]
        suite: Option<Suite>,
        /// Multiplier for Monte Carlo trial counts and random corpus sizes.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Rerun a manifest and compare output digests.
    Replay { manifest: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn layer_failure(e: LayerError) -> Failure {
    match e {
        LayerError::Speed(_) | LayerError::Rejected(_) | LayerError::Invalid(_) | LayerError::Io { .. } => {
            Failure::Config(e.to_string())
        }
        e => Failure::Runtime(e.into()),
    }
}

fn lil_failure(e: LilError) -> Failure {
    match e {
        LilError::Config(c) => c.into(),
        LilError::Layer(l) => layer_failure(l),
        e => Failure::Runtime(e.into()),
    }
}

fn verify_failure(e: VerifyError) -> Failure {
    match e {
        VerifyError::Config(c) => c.into(),
        e => Failure::Runtime(e.into()),
    }
}

/// Outcome of a completed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Pass,
    TestFailure,
}

impl Status {
    fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::TestFailure => 1,
        }
    }
}

struct Ctx {
    out_dir: PathBuf,
    threads: Option<usize>,
}

struct Run {
    status: Status,
    outputs: Vec<OutputDigest>,
    derived: Vec<DerivedSeed>,
}

/// Config file contents (or `{}`) with flag overrides applied on top.
fn base_document(path: Option<&Path>) -> Result<Map<String, Value>, Failure> {
    let Some(path) = path else { return Ok(Map::new()) };
    match load_json::<Value>(path)? {
        Value::Object(m) => Ok(m),
        _ => Err(ConfigError::invalid("/", "config must be a JSON object").into()),
    }
}

fn set<T: Serialize>(doc: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        doc.insert(key.into(), serde_json::to_value(v).expect("plain value"));
    }
}

fn set_nested<T: Serialize>(doc: &mut Map<String, Value>, outer: &str, key: &str, v: Option<T>) {
    if let Some(v) = v {
        let entry = doc.entry(outer.to_string()).or_insert_with(|| json!({}));
        if let Value::Object(m) = entry {
            m.insert(key.into(), serde_json::to_value(v).expect("plain value"));
        }
    }
}

fn parse_doc<T: DeserializeOwned>(doc: Map<String, Value>) -> Result<T, Failure> {
    let text = serde_json::to_string(&Value::Object(doc)).expect("json map");
    Ok(from_json_str(&text)?)
}

fn pool_install<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?;
    Ok(pool.install(f))
}

fn run_build_layers(spec: &LayerBuildSpec, ctx: &Ctx) -> Result<Run, Failure> {
    spec.validate()?;
    let p = build_layers(&spec.f, spec.m0, spec.x_max).map_err(layer_failure)?;
    let text = serde_json::to_string_pretty(&p).map_err(anyhow::Error::from)? + "\n";
    let out = write_output(&ctx.out_dir, &spec.out, text.as_bytes())?;
    println!("{} layers written to {}", p.len(), out.path);
    Ok(Run {
        status: Status::Pass,
        outputs: vec![out],
        derived: Vec::new(),
    })
}

fn run_lil(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Run, Failure> {
    cfg.validate()?;
    let exp = run_experiment(cfg, ctx.threads).map_err(lil_failure)?;
    let summary = band_summary(&exp.records, cfg.burn_in).map_err(lil_failure)?;
    let csv = records_csv(&exp.records).map_err(lil_failure)?;
    let doc = json!({ "layers": exp.plan.layers, "summary": summary });
    let text = serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n";
    let outputs = vec![
        write_output(&ctx.out_dir, &cfg.outputs.records, csv.as_bytes())?,
        write_output(&ctx.out_dir, &cfg.outputs.summary, text.as_bytes())?,
    ];
    let f = &summary.flatness;
    println!(
        "{} records; D_up/g growth {:?}, range-low D_lo/h retained {:?}, K {:.3}",
        exp.records.len(),
        f.up_g_growth,
        f.lo_h_low_retained,
        f.k_band
    );
    Ok(Run {
        status: Status::Pass,
        outputs,
        derived: (0..cfg.trials)
            .map(|i| DerivedSeed {
                task: LIL_TASK.into(),
                index: i,
                seed: cfg.trial_seed(i),
            })
            .collect(),
    })
}

fn run_verify(spec: &VerifySpec, out: &str, ctx: &Ctx) -> Result<Run, Failure> {
    let report = run_suite(spec, ctx.threads).map_err(verify_failure)?;
    for r in &report.reports {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        println!("[{mark}] {} ({} instances, {} violations)", r.test, r.instances, r.violations);
    }
    let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n";
    let digest = write_output(&ctx.out_dir, out, text.as_bytes())?;
    let derived = ["exact-walks", "exact-oracle", "exact-induced", "exact-inequalities", "mc-walk"]
        .iter()
        .map(|t| DerivedSeed {
            task: (*t).into(),
            index: 0,
            seed: derive_seed(spec.seed, t, 0),
        })
        .collect();
    Ok(Run {
        status: if report.passed { Status::Pass } else { Status::TestFailure },
        outputs: vec![digest],
        derived,
    })
}

#[derive(Serialize)]
struct WalkRow {
    trial: u64,
    seed: u64,
    n: u64,
    final_position: i64,
    min: i64,
    max: i64,
    range: u64,
}

#[derive(Serialize)]
struct AggregateRow {
    trial: u64,
    #[serde(flatten)]
    aggregate: walklab::excursion::TallyAggregate,
}

struct TrialOutput {
    walk: WalkRow,
    tallies: String,
    aggregates: Vec<AggregateRow>,
    bounds: String,
}

fn simulate_trial(spec: &SimulateSpec, layers: Option<&LayerParams>, trial: u64) -> anyhow::Result<TrialOutput> {
    let seed = derive_seed(spec.seed, SIMULATE_TASK, trial);
    let traj = generate_walk(seed, spec.n);
    let s = traj.summary(spec.n)?;
    let mut tallies = String::new();
    let mut aggregates = Vec::new();
    for &k in &spec.k {
        let t = excursion_field(&traj, k, spec.n)?;
        for line in t.csv_rows().lines() {
            tallies.push_str(&format!("{trial},{line}\n"));
        }
        aggregates.push(AggregateRow {
            trial,
            aggregate: t.aggregate(),
        });
    }
    let mut bounds = String::new();
    if let Some(p) = layers {
        let src = PathStats::new(&traj, spec.n)?;
        let rows = layer_table(&src, p, p.len() - 1, &DistanceConstants::default())?;
        for line in walklab::distance::layer_csv(&rows).lines() {
            bounds.push_str(&format!("{trial},{line}\n"));
        }
    }
    Ok(TrialOutput {
        walk: WalkRow {
            trial,
            seed: s.seed,
            n: s.n,
            final_position: s.final_position,
            min: s.min,
            max: s.max,
            range: s.range,
        },
        tallies,
        aggregates,
        bounds,
    })
}

fn run_simulate(spec: &SimulateSpec, ctx: &Ctx) -> Result<Run, Failure> {
    spec.validate()?;
    let layers = match &spec.f {
        Some(f) => Some(build_layers_covering(f, spec.m0, spec.n).map_err(layer_failure)?),
        None => None,
    };
    let trials: Vec<TrialOutput> = pool_install(ctx.threads, || {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| simulate_trial(spec, layers.as_ref(), t))
            .collect::<anyhow::Result<Vec<_>>>()
    })??;
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in &trials {
        w.serialize(&t.walk).map_err(anyhow::Error::from)?;
    }
    let walks = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    let mut outputs = vec![write_output(&ctx.out_dir, &spec.outputs.walks, &walks)?];
    if !spec.k.is_empty() {
        let mut tallies = String::from("trial,k,n,x,count\n");
        for t in &trials {
            tallies.push_str(&t.tallies);
        }
        let aggs: Vec<&AggregateRow> = trials.iter().flat_map(|t| &t.aggregates).collect();
        let text = serde_json::to_string_pretty(&aggs).map_err(anyhow::Error::from)? + "\n";
        outputs.push(write_output(&ctx.out_dir, &spec.outputs.tallies, tallies.as_bytes())?);
        outputs.push(write_output(&ctx.out_dir, &spec.outputs.aggregates, text.as_bytes())?);
    }
    if layers.is_some() {
        let mut bounds = format!("trial,{LAYER_CSV_HEADER}\n");
        for t in &trials {
            bounds.push_str(&t.bounds);
        }
        outputs.push(write_output(&ctx.out_dir, &spec.outputs.layer_bounds, bounds.as_bytes())?);
    }
    println!("{} walks of {} steps", spec.trials, spec.n);
    Ok(Run {
        status: Status::Pass,
        outputs,
        derived: (0..spec.trials)
            .map(|i| DerivedSeed {
                task: SIMULATE_TASK.into(),
                index: i,
                seed: derive_seed(spec.seed, SIMULATE_TASK, i),
            })
            .collect(),
    })
}

/// A fully resolved invocation.
enum Job {
    Simulate(SimulateSpec),
    BuildLayers(LayerBuildSpec),
    Lil(ExperimentConfig),
    Verify(VerifySpec, String),
}

impl Job {
    fn name(&self) -> &'static str {
        match self {
            Job::Simulate(_) => "simulate",
            Job::BuildLayers(_) => "build-layers",
            Job::Lil(_) => "lil",
            Job::Verify(..) => "verify",
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Job::Simulate(s) => s.seed,
            Job::BuildLayers(_) => 0,
            Job::Lil(c) => c.seed,
            Job::Verify(v, _) => v.seed,
        }
    }

    fn config(&self) -> Value {
        match self {
            Job::Simulate(s) => serde_json::to_value(s),
            Job::BuildLayers(s) => serde_json::to_value(s),
            Job::Lil(c) => serde_json::to_value(c),
            Job::Verify(v, _) => serde_json::to_value(v),
        }
        .expect("configs serialize")
    }

    fn from_manifest(m: &RunManifest) -> Result<Job, Failure> {
        let doc = match &m.config {
            Value::Object(o) => o.clone(),
            _ => return Err(ConfigError::invalid("/config", "expected an object").into()),
        };
        Ok(match m.subcommand.as_str() {
            "simulate" => Job::Simulate(parse_doc(doc)?),
            "build-layers" => Job::BuildLayers(parse_doc(doc)?),
            "lil" => Job::Lil(parse_doc(doc)?),
            "verify" => {
                let out = m
                    .outputs
                    .first()
                    .map(|o| o.path.clone())
                    .unwrap_or_else(|| "report.json".into());
                Job::Verify(parse_doc(doc)?, out)
            }
            other => return Err(Failure::Usage(format!("manifest names unknown subcommand {other:?}"))),
        })
    }

    fn execute(&self, ctx: &Ctx) -> Result<Run, Failure> {
        match self {
            Job::Simulate(s) => run_simulate(s, ctx),
            Job::BuildLayers(s) => run_build_layers(s, ctx),
            Job::Lil(c) => run_lil(c, ctx),
            Job::Verify(v, out) => run_verify(v, out, ctx),
        }
    }
}

fn parse_speed(doc: &mut Map<String, Value>, f: Option<String>) {
    set(doc, "f", f);
}

fn resolve(cli: &Cli) -> Result<Job, Failure> {
    let mut doc = base_document(cli.config.as_deref())?;
    let job = match &cli.command {
        Command::Simulate { n, trials, k, f, m0, out } => {
            set(&mut doc, "seed", cli.seed);
            set(&mut doc, "n", *n);
            set(&mut doc, "trials", *trials);
            if !k.is_empty() {
                set(&mut doc, "k", Some(k));
            }
            parse_speed(&mut doc, f.clone());
            set(&mut doc, "m0", *m0);
            set_nested(&mut doc, "outputs", "walks", out.clone());
            if !doc.contains_key("n") {
                return Err(Failure::Usage("simulate needs --n or n in the config".into()));
            }
            Job::Simulate(parse_doc(doc)?)
        }
        Command::BuildLayers { f, m0, xmax, out } => {
            parse_speed(&mut doc, f.clone());
            set(&mut doc, "m0", *m0);
            set(&mut doc, "x_max", *xmax);
            set(&mut doc, "out", out.clone());
            for (key, flag) in [("f", "--f"), ("x_max", "--xmax")] {
                if !doc.contains_key(key) {
                    return Err(Failure::Usage(format!("build-layers needs {flag} or {key} in the config")));
                }
            }
            Job::BuildLayers(parse_doc(doc)?)
        }
        Command::Lil {
            f,
            layers,
            n_max,
            trials,
            out,
            summary,
        } => {
            set(&mut doc, "seed", cli.seed);
            if f.is_some() {
                doc.remove("layers");
                parse_speed(&mut doc, f.clone());
            }
            if let Some(path) = layers {
                let p: LayerParams = load_json(path)?;
                doc.remove("f");
                set(&mut doc, "layers", Some(p));
            }
            set(&mut doc, "n_max", *n_max);
            set(&mut doc, "trials", *trials);
            set_nested(&mut doc, "outputs", "records", out.clone());
            set_nested(&mut doc, "outputs", "summary", summary.clone());
            if !doc.contains_key("f") && !doc.contains_key("layers") {
                return Err(Failure::Usage("lil needs a speed function (--f) or layers (--layers)".into()));
            }
            if !doc.contains_key("n_max") {
                return Err(Failure::Usage("lil needs --n-max or n_max in the config".into()));
            }
            Job::Lil(parse_doc(doc)?)
        }
        Command::Verify { suite, scale, out } => {
            set(&mut doc, "seed", cli.seed);
            set(&mut doc, "suite", *suite);
            set(&mut doc, "scale", *scale);
            let spec: VerifySpec = parse_doc(doc)?;
            spec.validate()?;
            Job::Verify(spec, out.clone().unwrap_or_else(|| "report.json".into()))
        }
        Command::Replay { .. } => unreachable!("replay is resolved from its manifest"),
    };
    Ok(job)
}

fn run_job(job: &Job, ctx: &Ctx) -> Result<(Status, RunManifest), Failure> {
    let started = now();
    let run = job.execute(ctx)?;
    let m = RunManifest {
        tool: "walklab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: job.name().into(),
        config: job.config(),
        seed: job.seed(),
        seed_rule: SEED_RULE.into(),
        derived_seeds: run.derived,
        threads: ctx.threads,
        started,
        finished: now(),
        exit_code: run.status.code(),
        outputs: run.outputs,
    };
    let text = serde_json::to_string_pretty(&m).map_err(anyhow::Error::from)? + "\n";
    write_output(&ctx.out_dir, &manifest_name(job.name()), text.as_bytes())?;
    Ok((run.status, m))
}

fn replay(path: &Path, ctx: &Ctx) -> Result<Status, Failure> {
    let old: RunManifest = load_json(path)?;
    let job = Job::from_manifest(&old)?;
    let (_, new) = run_job(&job, ctx)?;
    let mut same = old.outputs.len() == new.outputs.len();
    for (a, b) in old.outputs.iter().zip(&new.outputs) {
        let ok = a == b;
        same &= ok;
        println!("{} {} {}", if ok { "same" } else { "DIFFERS" }, b.path, b.sha256);
    }
    Ok(if same { Status::Pass } else { Status::TestFailure })
}

fn dispatch(cli: &Cli) -> Result<Status, Failure> {
    if cli.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let ctx = Ctx {
        out_dir: cli.out_dir.clone(),
        threads: cli.threads,
    };
    if let Command::Replay { manifest } = &cli.command {
        if cli.config.is_some() || cli.seed.is_some() {
            return Err(Failure::Usage("replay takes everything from the manifest; drop --config and --seed".into()));
        }
        return replay(manifest, &ctx);
    }
    let job = resolve(cli)?;
    let (status, m) = run_job(&job, &ctx)?;
    eprintln!("manifest: {}", manifest::resolve(&ctx.out_dir, &manifest_name(&m.subcommand)).display());
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Config(m)) => {
            eprintln!("{m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
