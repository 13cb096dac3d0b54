//! Sweep manifest: every artifact a sweep writes, with content hashes, so
//! sweeps can resume and their outputs can be verified end to end.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use adamlab_core::{Error, Result};

use crate::report::RunSummary;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Done,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the sweep directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub width: usize,
    pub dataset_index: u64,
    /// Hash of the run's full config; a changed config invalidates the entry.
    pub config_hash: String,
    pub status: RunStatus,
    pub files: Vec<FileEntry>,
    pub summary: Option<RunSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: BTreeMap<String, RunEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("bad manifest {}: {e}", path.display())))
    }

    /// Atomic save: write to a temporary sibling file, then rename over the
    /// manifest so readers never observe a half-written file.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        let text = serde_json::to_string_pretty(self).expect("manifest serialization");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, dir.join(MANIFEST_FILE))?;
        Ok(())
    }

    /// Whether `key` holds a completed run with this exact config whose
    /// files are still present and unmodified.
    pub fn is_complete(&self, dir: &Path, key: &str, config_hash: &str) -> bool {
        let Some(entry) = self.entries.get(key) else { return false };
        if entry.config_hash != config_hash || !matches!(entry.status, RunStatus::Done) {
            return false;
        }
        entry.files.iter().all(|f| {
            hash_file(&dir.join(&f.path)).map(|h| h == f.sha256).unwrap_or(false)
        })
    }
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

pub fn hash_file(path: &Path) -> Result<String> {
    Ok(hash_bytes(&std::fs::read(path)?))
}

/// Stable hash of any serializable config (canonical JSON of the fixed
/// field order).
pub fn config_hash<T: Serialize>(value: &T) -> String {
    hash_bytes(serde_json::to_string(value).expect("config serialization").as_bytes())
}

/// Result of re-hashing every manifest-listed file.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checked_files: usize,
    pub missing: Vec<String>,
    pub mismatched: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.missing.is_empty() && self.mismatched.is_empty()
    }
}

/// Re-hashes every file listed in the manifest of `dir`.
pub fn verify_dir(dir: &Path) -> Result<VerifyReport> {
    let manifest = Manifest::load(dir)?;
    let mut report = VerifyReport { checked_files: 0, missing: Vec::new(), mismatched: Vec::new() };
    for entry in manifest.entries.values() {
        for f in &entry.files {
            let path = dir.join(&f.path);
            report.checked_files += 1;
            match hash_file(&path) {
                Ok(h) if h == f.sha256 => {}
                Ok(_) => report.mismatched.push(f.path.clone()),
                Err(_) => report.missing.push(f.path.clone()),
            }
        }
    }
    Ok(report)
}
