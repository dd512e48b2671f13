//! Run manifests: what ran, with which configuration, and what it wrote.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{emit, RunConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct ExperimentManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: RunConfig,
    /// The configuration as a config file; `stirlab <cmd> --config` on it reruns the experiment.
    pub config_text: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every output, then the manifest. A failed output write leaves no manifest behind.
pub fn write_outputs(
    dir: &Path,
    cfg: &RunConfig,
    files: &[(String, Vec<u8>)],
    wall_time_seconds: f64,
) -> io::Result<ExperimentManifest> {
    fs::create_dir_all(dir)?;
    let stale = dir.join(MANIFEST_FILE);
    if stale.exists() {
        fs::remove_file(&stale)?;
    }
    let mut outputs = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
        outputs.push(OutputDigest { file: name.clone(), sha256: sha256_hex(bytes) });
    }
    let manifest = ExperimentManifest {
        tool: "stirlab",
        version: crate::commands::VERSION,
        seed: cfg.seed,
        config: cfg.clone(),
        config_text: emit(cfg),
        wall_time_seconds,
        outputs,
    };
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
    text.push(b'\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}
