use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One file written by a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// Path as configured, relative to the output directory unless absolute.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeed {
    pub task: String,
    pub index: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Fully resolved configuration, defaults applied.
    pub config: serde_json::Value,
    pub seed: u64,
    pub seed_rule: String,
    pub derived_seeds: Vec<DerivedSeed>,
    pub threads: Option<usize>,
    pub started: String,
    pub finished: String,
    pub exit_code: i32,
    pub outputs: Vec<OutputDigest>,
}

pub const SEED_RULE: &str =
    "derive_seed(master, task, i) = mix64(mix64(master ^ fnv1a64(task)) ^ mix64(i + 1))";

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn resolve(out_dir: &Path, name: &str) -> PathBuf {
    let p = Path::new(name);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

/// Write `bytes` under `out_dir` and return the digest entry, computed
/// from the file as read back.
pub fn write_output(out_dir: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<OutputDigest> {
    let path = resolve(out_dir, name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    digest_file(out_dir, name)
}

pub fn digest_file(out_dir: &Path, name: &str) -> anyhow::Result<OutputDigest> {
    let path = resolve(out_dir, name);
    let data = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(OutputDigest {
        path: name.to_string(),
        bytes: data.len() as u64,
        sha256: sha256_hex(&data),
    })
}

pub fn manifest_name(subcommand: &str) -> String {
    format!("{subcommand}.manifest.json")
}
