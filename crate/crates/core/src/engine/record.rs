//! Result-store line schema.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::vector::SkillVector;
use crate::error::Result;
use crate::store;
use crate::taxonomy::SlotKey;

pub const RECORD_SCHEMA: u32 = 1;

/// One successful generate-then-score outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub student_id: String,
    pub slot: SlotKey,
    pub scenario: String,
    pub question: String,
    pub artifact: String,
    pub observed: SkillVector,
    pub score: u32,
    /// Integer the scorer reported, when it differed from the vector-derived score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_score: Option<i64>,
    pub feedback: String,
    pub samples: u32,
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<Vec<f64>>,
    pub generator: String,
    pub scorer: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub student_id: String,
    pub slot: SlotKey,
    pub error_kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    pub generator: String,
    pub scorer: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StoreEntry {
    Result(ResultRecord),
    Failure(FailureRecord),
}

impl StoreEntry {
    pub fn student_id(&self) -> &str {
        match self {
            StoreEntry::Result(r) => &r.student_id,
            StoreEntry::Failure(f) => &f.student_id,
        }
    }

    pub fn slot(&self) -> SlotKey {
        match self {
            StoreEntry::Result(r) => r.slot,
            StoreEntry::Failure(f) => f.slot,
        }
    }

    pub fn as_result(&self) -> Option<&ResultRecord> {
        match self {
            StoreEntry::Result(r) => Some(r),
            StoreEntry::Failure(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreLine {
    pub schema: u32,
    #[serde(flatten)]
    pub entry: StoreEntry,
}

impl From<StoreEntry> for StoreLine {
    fn from(entry: StoreEntry) -> Self {
        StoreLine {
            schema: RECORD_SCHEMA,
            entry,
        }
    }
}

pub fn read_store(path: &FsPath) -> Result<Vec<StoreEntry>> {
    let lines: Vec<StoreLine> = store::read_lines(path)?;
    Ok(lines.into_iter().map(|l| l.entry).collect())
}

/// Latest successful record per `(student, slot)`; failures are ignored.
pub fn completed(entries: &[StoreEntry]) -> BTreeMap<(String, SlotKey), &ResultRecord> {
    entries
        .iter()
        .filter_map(StoreEntry::as_result)
        .map(|r| ((r.student_id.clone(), r.slot), r))
        .collect()
}

/// Successful records only, with later duplicates replacing earlier ones.
pub fn successful(entries: &[StoreEntry]) -> Vec<ResultRecord> {
    completed(entries).into_values().cloned().collect()
}
