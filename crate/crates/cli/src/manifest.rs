//! Run manifests written next to every artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{data, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    /// `None` for outputs whose content varies between identical runs,
    /// such as audit logs with wall-clock timestamps.
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<OutputEntry>,
    pub tool_version: String,
    pub timestamp: String,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| data(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Collects what a command read and wrote, then writes the manifest.
#[derive(Debug, Clone)]
pub struct ManifestBuilder {
    command: String,
    config_sha256: Option<String>,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<String>,
    outputs: Vec<(PathBuf, bool)>,
}

impl ManifestBuilder {
    pub fn new(command: impl Into<String>) -> Self {
        ManifestBuilder {
            command: command.into(),
            config_sha256: None,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn config(&mut self, path: &Path) -> CliResult<&mut Self> {
        self.config_sha256 = Some(sha256_file(path)?);
        Ok(self)
    }

    pub fn seed(&mut self, name: &str, seed: u64) -> &mut Self {
        self.seeds.insert(name.to_string(), seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) -> &mut Self {
        self.outputs.push((path.into(), true));
        self
    }

    pub fn volatile_output(&mut self, path: impl Into<PathBuf>) -> &mut Self {
        self.outputs.push((path.into(), false));
        self
    }

    pub fn build(&self, dir: &Path) -> CliResult<RunManifest> {
        let mut outputs = Vec::new();
        for (path, stable) in &self.outputs {
            let rel = path.strip_prefix(dir).unwrap_or(path);
            outputs.push(OutputEntry {
                path: rel.display().to_string(),
                sha256: if *stable { Some(sha256_file(path)?) } else { None },
            });
        }
        Ok(RunManifest {
            command: self.command.clone(),
            config_sha256: self.config_sha256.clone(),
            seeds: self.seeds.clone(),
            inputs: self.inputs.clone(),
            outputs,
            tool_version: TOOL_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        })
    }

    /// Writes `manifest_path` and returns what was written.
    pub fn write(&self, manifest_path: &Path) -> CliResult<RunManifest> {
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let manifest = self.build(dir)?;
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(manifest_path, json + "\n")
            .map_err(|e| data(anyhow::anyhow!("cannot write {}: {e}", manifest_path.display())))?;
        Ok(manifest)
    }
}

/// `out.jsonl` gets `out.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}.manifest.json"))
}
