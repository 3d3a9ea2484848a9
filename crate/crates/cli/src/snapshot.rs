//! Snapshot files: a trained model as one self-describing JSON document.
//!
//! Floats are printed in shortest round-trip form and parsed exactly, so a
//! loaded model evaluates identically to the one that was saved.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dmr::corpus::IngestOptions;
use dmr::trainer::ModelSnapshot;
use serde::{Deserialize, Serialize};

use crate::manifest::sha256_hex;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub format_version: u32,
    /// Digest of the manifest of the run that produced this snapshot.
    pub manifest_digest: String,
    /// SHA-256 of the serialized model, checked on load.
    pub model_sha256: String,
    /// Tokenization used at training time, reused for held-out text.
    pub ingest: IngestOptions,
    pub model: ModelSnapshot,
}

impl SnapshotFile {
    pub fn new(model: ModelSnapshot, ingest: IngestOptions, manifest_digest: &str) -> Result<Self> {
        Ok(Self {
            format_version: SNAPSHOT_VERSION,
            manifest_digest: manifest_digest.to_string(),
            model_sha256: model_digest(&model)?,
            ingest,
            model,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing snapshot {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading snapshot {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("loading snapshot {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let header: serde_json::Value = serde_json::from_str(text)?;
        match header.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SNAPSHOT_VERSION) => {}
            Some(v) => bail!("unsupported snapshot format version {v}"),
            None => bail!("not a snapshot file (no format_version)"),
        }
        let file: Self = serde_json::from_value(header)?;
        if model_digest(&file.model)? != file.model_sha256 {
            bail!("snapshot contents do not match their recorded digest");
        }
        file.model.validate()?;
        Ok(file)
    }
}

fn model_digest(model: &ModelSnapshot) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(model)?))
}
