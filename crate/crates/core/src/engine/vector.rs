use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate_score, Rounding};
use crate::error::{GeaError, Result};
use crate::taxonomy::{SkillId, SkillSet, SKILL_COUNT};

/// Marks a skill that the slot does not test.
pub const SENTINEL: f64 = -1.0;

/// Observed 24-entry skill vector: sentinel exactly at the slot's
/// non-applicable positions, a unit-interval score everywhere else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkillVector {
    entries: Vec<f64>,
}

impl SkillVector {
    pub fn new(entries: Vec<f64>, applicable: SkillSet) -> Result<Self> {
        if entries.len() != SKILL_COUNT {
            return Err(GeaError::validation(
                "skill_vector",
                format!("expected {SKILL_COUNT} entries, found {}", entries.len()),
            ));
        }
        if applicable.is_empty() {
            return Err(GeaError::validation("skill_vector", "no applicable skills"));
        }
        for (i, &v) in entries.iter().enumerate() {
            let id = SkillId::from_index(i);
            if applicable.contains(id) {
                if v == SENTINEL {
                    return Err(GeaError::validation(
                        format!("skill_vector[{id}]"),
                        "sentinel -1.0 on an applicable skill",
                    ));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(GeaError::validation(
                        format!("skill_vector[{id}]"),
                        format!("value {v} outside [0, 1]"),
                    ));
                }
            } else if v != SENTINEL {
                return Err(GeaError::validation(
                    format!("skill_vector[{id}]"),
                    format!("expected sentinel -1.0 on a non-applicable skill, found {v}"),
                ));
            }
        }
        Ok(SkillVector { entries })
    }

    /// Builds from applicable values; everything else becomes the sentinel.
    pub fn from_values(values: &[(SkillId, f64)]) -> Result<Self> {
        let mut entries = vec![SENTINEL; SKILL_COUNT];
        let mut set = SkillSet::empty();
        for &(id, v) in values {
            entries[id.index()] = v;
            set.insert(id);
        }
        SkillVector::new(entries, set)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, id: SkillId) -> Option<f64> {
        let v = self.entries[id.index()];
        (v != SENTINEL).then_some(v)
    }

    pub fn applicable(&self) -> SkillSet {
        SkillId::all().filter(|id| self.get(*id).is_some()).collect()
    }

    /// `(skill, value)` for every non-sentinel entry, in id order.
    pub fn values(&self) -> impl Iterator<Item = (SkillId, f64)> + '_ {
        SkillId::all().filter_map(|id| self.get(id).map(|v| (id, v)))
    }

    pub fn score(&self, rounding: Rounding) -> u32 {
        aggregate_score(&self.entries, rounding).expect("validated vector")
    }
}
