//! Run manifests.
//!
//! A run directory gets one manifest per `simulate` invocation that added
//! entries to its record store. Manifests are never rewritten; the one with
//! the highest revision describes the current state of the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use gea_core::analytics::RunMetadata;
use gea_core::backends::{BackendKind, RetryPolicy};
use gea_core::config::Seeds;
use gea_core::engine::Mode;
use gea_core::store::sha256_file;
use gea_core::{GeaConfig, GeaError, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_SCHEMA: u32 = 1;

pub const CONFIG_FILE: &str = "config.toml";
pub const COHORT_FILE: &str = "cohort.jsonl";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SESSIONS_FILE: &str = "sessions.csv";
pub const REPORT_DIR: &str = "report";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub students: usize,
    /// Successful `(student, slot)` records in the store.
    pub records: usize,
    /// `(student, slot)` pairs whose latest entry is a failure.
    pub failures: usize,
    pub new_records: usize,
    pub new_failures: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub kind: BackendKind,
    pub generator: String,
    pub scorer: String,
    pub generator_temperature: f64,
    pub scorer_temperature: f64,
    pub retry: RetryPolicy,
    pub scoring_samples: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub run_id: String,
    pub revision: u32,
    pub tool_version: String,
    pub created_at: DateTime<Utc>,
    pub mode: Mode,
    pub theta: f64,
    pub seeds: Seeds,
    pub rng: String,
    pub taxonomy_version: String,
    pub config_sha256: String,
    /// SHA-256 of each run file at the time of writing.
    pub files: BTreeMap<String, String>,
    pub backend: BackendInfo,
    pub counts: Counts,
}

impl RunManifest {
    pub fn metadata(&self) -> RunMetadata {
        RunMetadata {
            run_id: self.run_id.clone(),
            taxonomy_version: self.taxonomy_version.clone(),
            generator: self.backend.generator.clone(),
            scorer: self.backend.scorer.clone(),
            seeds: self.seeds.clone(),
            config_sha256: self.config_sha256.clone(),
        }
    }

    pub fn file_name(revision: u32) -> String {
        format!("manifest-{revision:03}.json")
    }

    /// Writes the manifest; an existing file with the same revision is an error.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(Self::file_name(self.revision));
        if path.exists() {
            return Err(GeaError::State(format!("{} already exists", path.display())));
        }
        gea_core::analytics::write_json(&path, self)?;
        Ok(path)
    }
}

/// Hashes of the run files that exist in `dir`.
pub fn file_hashes(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for name in [CONFIG_FILE, COHORT_FILE, RECORDS_FILE, SESSIONS_FILE] {
        let p = dir.join(name);
        if p.exists() {
            out.insert(name.to_string(), sha256_file(&p)?);
        }
    }
    Ok(out)
}

/// The highest-revision manifest in `dir`, if any.
pub fn latest(dir: &Path) -> Result<Option<RunManifest>> {
    let entries = std::fs::read_dir(dir).map_err(|e| GeaError::io(dir, e))?;
    let mut best: Option<(u32, PathBuf)> = None;
    for entry in entries {
        let entry = entry.map_err(|e| GeaError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(rev) = name
            .strip_prefix("manifest-")
            .and_then(|s| s.strip_suffix(".json"))
            .and_then(|s| s.parse::<u32>().ok())
        else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| rev > *b) {
            best = Some((rev, entry.path()));
        }
    }
    let Some((_, path)) = best else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| GeaError::io(&path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| GeaError::Store {
        path,
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn backend_info(cfg: &GeaConfig, generator: String, scorer: String) -> BackendInfo {
    let b = cfg.backend();
    BackendInfo {
        kind: b.kind,
        generator,
        scorer,
        generator_temperature: b.generator.temperature,
        scorer_temperature: b.scorer.temperature,
        retry: b.retry.clone(),
        scoring_samples: cfg.scoring().samples,
    }
}
