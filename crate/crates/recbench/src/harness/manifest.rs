//! Run manifest: everything needed to reproduce a bundle.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, SplitConfig};
use crate::{Error, Result};

/// Traceability record written alongside every bundle. The embedded config,
/// seeds, and dataset fingerprints fully determine the run; re-running the
/// manifest's config reproduces every table bit-identically in sequential
/// mode (wall clock aside).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    pub config_hash: String,
    /// The resolved configuration, embedded verbatim.
    pub config: serde_json::Value,
    /// Input file name to SHA-256, hex encoded.
    pub dataset_fingerprint: BTreeMap<String, String>,
    pub candidate_count: usize,
    pub seeds: BTreeMap<String, u64>,
    pub model_hyperparameters: BTreeMap<String, serde_json::Value>,
    /// "ok" or the failure message per model.
    pub model_status: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
    pub toolkit_version: String,
}

/// SHA-256 of the canonical (sorted-key) JSON encoding of the config.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let value = serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?;
    let canonical = serde_json::to_string(&value).map_err(|e| Error::Config(e.to_string()))?;
    Ok(hex_digest(canonical.as_bytes()))
}

/// SHA-256 fingerprints of the dataset files the config points at.
pub fn dataset_fingerprint(config: &ExperimentConfig) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    match &config.dataset.split {
        SplitConfig::NcfSplit { dir } => {
            for suffix in ["train.rating", "test.rating", "test.negative"] {
                let path = dir.join(format!("{}.{suffix}", config.dataset.name));
                out.insert(
                    path.file_name().unwrap().to_string_lossy().into_owned(),
                    file_digest(&path)?,
                );
            }
        }
        SplitConfig::TemporalLoo { path, .. } => {
            out.insert(
                path.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string()),
                file_digest(path)?,
            );
        }
    }
    Ok(out)
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
