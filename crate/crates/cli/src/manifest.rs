//! Run manifest: what was run, with which inputs, and what it produced.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    /// SHA-256 of the effective configuration as written to `config.toml`.
    pub config_sha256: String,
    pub seed: u64,
    pub trajectories: usize,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash every output, naming each relative to `dir`.
pub fn describe_outputs(dir: &Path, files: &[PathBuf]) -> Result<Vec<OutputFile>, CliError> {
    files
        .iter()
        .map(|f| {
            let data = std::fs::read(f)
                .map_err(|e| CliError::Io(format!("cannot read back {}: {e}", f.display())))?;
            Ok(OutputFile {
                path: f
                    .strip_prefix(dir)
                    .unwrap_or(f)
                    .to_string_lossy()
                    .into_owned(),
                sha256: sha256_hex(&data),
                bytes: data.len() as u64,
            })
        })
        .collect()
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("serializing manifest: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
