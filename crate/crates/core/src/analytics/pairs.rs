//! Paired (true, observed) skill observations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cohort::StudentProfile;
use crate::engine::ResultRecord;
use crate::error::{GeaError, Result};
use crate::taxonomy::{SkillId, SlotKey, Taxonomy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedObservation {
    pub skill: SkillId,
    pub true_value: f64,
    pub observed_value: f64,
    pub student_id: String,
    pub slot: SlotKey,
}

/// Canonical order: student, slot, skill.
pub fn canonical_sort(pairs: &mut [PairedObservation]) {
    pairs.sort_by(|a, b| {
        (a.student_id.as_str(), a.slot, a.skill)
            .cmp(&(b.student_id.as_str(), b.slot, b.skill))
            .then(a.true_value.total_cmp(&b.true_value))
            .then(a.observed_value.total_cmp(&b.observed_value))
    });
}

/// One observation per non-sentinel entry of every record, in canonical order.
pub fn extract_pairs(
    records: &[ResultRecord],
    cohort: &[StudentProfile],
    taxonomy: &Taxonomy,
) -> Result<Vec<PairedObservation>> {
    let by_id: BTreeMap<&str, &StudentProfile> = cohort.iter().map(|p| (p.student_id.as_str(), p)).collect();
    let mut out = Vec::new();
    for r in records {
        let profile = by_id
            .get(r.student_id.as_str())
            .ok_or_else(|| GeaError::Join(format!("record for unknown student `{}`", r.student_id)))?;
        let expected = taxonomy.slot(r.slot)?.applicable;
        if r.observed.applicable() != expected {
            return Err(GeaError::validation(
                "observed",
                format!(
                    "record {}/{} has sentinels outside the slot's non-applicable set",
                    r.student_id, r.slot
                ),
            ));
        }
        for (skill, observed_value) in r.observed.values() {
            out.push(PairedObservation {
                skill,
                true_value: profile.skill(skill),
                observed_value,
                student_id: r.student_id.clone(),
                slot: r.slot,
            });
        }
    }
    canonical_sort(&mut out);
    Ok(out)
}

pub fn split(pairs: &[PairedObservation]) -> (Vec<f64>, Vec<f64>) {
    pairs.iter().map(|p| (p.true_value, p.observed_value)).unzip()
}
