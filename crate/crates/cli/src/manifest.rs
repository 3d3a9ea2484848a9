//! Run manifests: what was run, on which inputs, with which settings.
//!
//! The digest covers everything except timestamps, so two runs of the same
//! command on the same inputs share a digest and produce identical outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Documents assigned to one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold: usize,
    pub documents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    /// Fully resolved argument list (config-file settings expanded).
    pub args: Vec<String>,
    /// The parsed settings, defaults included.
    pub config: serde_json::Value,
    pub inputs: Vec<InputFile>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub folds: Vec<FoldAssignment>,
    pub outputs: Vec<PathBuf>,
    pub digest: String,
    pub started_at: u64,
    pub finished_at: u64,
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: serde_json::Value, seed: u64) -> Self {
        Self {
            format_version: MANIFEST_VERSION,
            command: command.to_string(),
            args,
            config,
            inputs: Vec::new(),
            seed,
            folds: Vec::new(),
            outputs: Vec::new(),
            digest: String::new(),
            started_at: unix_now(),
            finished_at: 0,
        }
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.push(InputFile {
            role: role.to_string(),
            path: path.to_path_buf(),
            sha256: file_digest(path)?,
        });
        Ok(())
    }

    /// Fixes the digest; call after inputs, folds and outputs are recorded.
    pub fn seal(&mut self) -> &str {
        self.digest = self.compute_digest();
        &self.digest
    }

    pub fn compute_digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.digest.clear();
        canonical.started_at = 0;
        canonical.finished_at = 0;
        sha256_hex(&serde_json::to_vec(&canonical).expect("manifest serializes"))
    }

    /// Fails if any recorded input changed since the run.
    pub fn verify_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let now = file_digest(&input.path)?;
            if now != input.sha256 {
                bail!(
                    "{} input {} changed since the recorded run (sha256 {} != {})",
                    input.role,
                    input.path.display(),
                    now,
                    input.sha256
                );
            }
        }
        Ok(())
    }

    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.finished_at = unix_now();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing manifest {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let manifest: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        if manifest.format_version != MANIFEST_VERSION {
            bail!("unsupported manifest version {}", manifest.format_version);
        }
        if manifest.compute_digest() != manifest.digest {
            bail!("manifest {} does not match its digest", path.display());
        }
        Ok(manifest)
    }
}

/// `<path>.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
