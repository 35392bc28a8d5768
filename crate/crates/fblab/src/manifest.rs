use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use fblab_core::export::to_json;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    pub fn of(name: &str, content: &[u8]) -> Self {
        Self { name: name.to_string(), sha256: sha256_hex(content), bytes: content.len() as u64 }
    }
}

/// Provenance record written next to every result set. Files are kept sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub created_unix: u64,
    pub updated_unix: u64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(content: &[u8]) -> String {
    hex::encode(Sha256::digest(content))
}

pub fn now_unix() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        let now = now_unix();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            created_unix: now,
            updated_unix: now,
            files: Vec::new(),
        }
    }

    /// Adds or replaces the entry for `entry.name`.
    pub fn record(&mut self, entry: FileEntry) {
        self.files.retain(|f| f.name != entry.name);
        self.files.push(entry);
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
    }

    pub fn entry(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.name == name)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed {}", path.display()))
    }

    pub fn save(&mut self, dir: &Path) -> Result<()> {
        self.updated_unix = now_unix();
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, to_json(self)?).with_context(|| format!("cannot write {}", path.display()))
    }
}

/// Writes each `(name, content)` under `dir` and records it in `manifest`.
pub fn write_artifacts(dir: &Path, manifest: &mut RunManifest, files: &[(&str, String)]) -> Result<()> {
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
        manifest.record(FileEntry::of(name, content.as_bytes()));
    }
    Ok(())
}
