//! Files in the output directory: CSV tables, stage caches and the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.json";
pub const CACHE_DIR: &str = "cache";
pub const FORMATS: &str = include_str!("../FORMATS.md");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Content key of a stage: its config sections and the keys of its inputs.
pub fn stage_key<T: Serialize>(stage: &str, sections: &T, upstream: &[&str]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(stage.as_bytes());
    h.update(serde_json::to_vec(sections)?);
    for k in upstream {
        h.update(k.as_bytes());
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Writes into the output directory and remembers what was written.
pub struct OutDir {
    pub root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join(CACHE_DIR)).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn take_written(&mut self) -> Vec<String> {
        std::mem::take(&mut self.written)
    }

    fn record(&mut self, rel: &str) {
        if !self.written.iter().any(|w| w == rel) {
            self.written.push(rel.to_string());
        }
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.record(rel);
        Ok(())
    }

    pub fn write_csv<R: Serialize>(&mut self, rel: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write_bytes(rel, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(rel, &bytes)
    }

    fn cache_rel(stage: &str) -> String {
        format!("{CACHE_DIR}/{stage}.json")
    }

    pub fn store<T: Serialize>(&mut self, stage: &str, key: &str, data: &T) -> Result<()> {
        let bytes = serde_json::to_vec(&CacheRef { key, data })?;
        self.write_bytes(&Self::cache_rel(stage), &bytes)
    }

    /// Cached output of `stage`, or the reason it cannot be used.
    pub fn load<T: DeserializeOwned>(&self, stage: &str) -> Result<Cached<T>, CacheMiss> {
        let path = self.root.join(Self::cache_rel(stage));
        let bytes = fs::read(&path).map_err(|_| CacheMiss::Missing)?;
        let c: Cached<T> = serde_json::from_slice(&bytes).map_err(|e| CacheMiss::Corrupt(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Serialize)]
struct CacheRef<'a, T> {
    key: &'a str,
    data: &'a T,
}

#[derive(Deserialize)]
pub struct Cached<T> {
    pub key: String,
    pub data: T,
}

#[derive(Debug)]
pub enum CacheMiss {
    Missing,
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub key: String,
    pub seconds: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub summary: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// Stages of this and earlier runs into the same directory.
    pub stages: BTreeMap<String, StageRecord>,
    /// Every file in the output directory except this manifest.
    pub files: Vec<FileEntry>,
    /// Acceptance checks evaluated by this run.
    pub checks: Vec<CheckRecord>,
    pub all_passed: bool,
}

impl RunManifest {
    /// Stage records of an earlier manifest with the same configuration.
    pub fn previous_stages(root: &Path, config: &RunConfig) -> BTreeMap<String, StageRecord> {
        let Ok(bytes) = fs::read(root.join(MANIFEST)) else {
            return BTreeMap::new();
        };
        match serde_json::from_slice::<RunManifest>(&bytes) {
            Ok(m) if m.config == *config => m.stages,
            _ => BTreeMap::new(),
        }
    }

    pub fn finish(
        root: &Path,
        config: &RunConfig,
        stages: BTreeMap<String, StageRecord>,
        checks: Vec<CheckRecord>,
    ) -> Result<Self> {
        let files = scan_files(root)?;
        let all_passed = checks.iter().all(|c| c.passed);
        let m = RunManifest {
            tool: "scar".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            stages,
            files,
            checks,
            all_passed,
        };
        let mut bytes = serde_json::to_vec_pretty(&m)?;
        bytes.push(b'\n');
        fs::write(root.join(MANIFEST), bytes)?;
        Ok(m)
    }
}

/// Sorted entries for all files under `root`, the manifest excluded.
pub fn scan_files(root: &Path) -> Result<Vec<FileEntry>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).with_context(|| format!("cannot list {}", dir.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(root)?.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            if rel == MANIFEST {
                continue;
            }
            let bytes = fs::read(&path)?;
            out.push(FileEntry { path: rel, sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        }
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}
