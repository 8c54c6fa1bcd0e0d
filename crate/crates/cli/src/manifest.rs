//! Run manifests and the top-level `run` entry point.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha1::{Digest, Sha1};

use crate::config::{validate, ExperimentConfig, Kind};
use crate::error::{CliError, Result};
use crate::experiments::execute;

/// Name of the manifest inside the output directory.
pub const MANIFEST_NAME: &str = "manifest.json";

/// Git blob hash (`sha1("blob <len>\0" ++ bytes)`) in hex.
pub fn git_blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub kind: Kind,
    pub config_path: Option<String>,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub residuals: BTreeMap<String, f64>,
    pub inputs: ExperimentConfig,
    pub files: Vec<FileEntry>,
}

/// What to run and where.
#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub config_text: String,
    pub config_path: Option<PathBuf>,
    /// Kind requested by the subcommand; `None` takes it from the config.
    pub kind: Option<Kind>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunRequest {
    pub fn from_path(path: &Path, kind: Option<Kind>, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self> {
        let config_text = fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Ok(Self { config_text, config_path: Some(path.to_path_buf()), kind, out, seed })
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.display().to_string(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Validates, runs and writes every output plus the manifest under the output
/// directory. Nothing is written unless validation and the run succeed.
pub fn run(req: &RunRequest) -> Result<Manifest> {
    let started = Instant::now();
    let raw = ExperimentConfig::from_toml(&req.config_text)?;
    let validated = validate(&raw, req.kind, req.seed)?;
    let out_dir = req
        .out
        .clone()
        .or_else(|| raw.out.clone())
        .ok_or_else(|| CliError::Validation(vec!["out: missing (set `out` in the config or pass --out)".into()]))?;
    let outputs = execute(&validated)?;

    let mut files = Vec::with_capacity(outputs.files.len());
    for (name, bytes) in &outputs.files {
        write_file(&out_dir.join(name), bytes)?;
        files.push(FileEntry { path: name.clone(), bytes: bytes.len(), hash: git_blob_hash(bytes) });
    }
    let manifest = Manifest {
        kind: validated.kind,
        config_path: req.config_path.as_ref().map(|p| p.display().to_string()),
        config_hash: git_blob_hash(req.config_text.as_bytes()),
        seed: validated.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        residuals: outputs.residuals,
        inputs: raw,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Usage(e.to_string()))?;
    write_file(&out_dir.join(MANIFEST_NAME), text.as_bytes())?;
    Ok(manifest)
}
