//! Skill taxonomy, assignment slots and the proficiency scale.
//!
//! Everything here is loaded from configuration and is immutable afterwards.

mod scale;
mod skills;
mod slots;

pub use scale::{Level, LevelDef, ProficiencyScale};
pub use skills::{SkillDef, SkillGroup, SkillId, SkillSet, Subgroup, SKILL_COUNT};
pub use slots::{Path, SlotKey, SlotSpec, Stage};

use crate::error::{GeaError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Taxonomy {
    pub version: String,
    skills: Vec<SkillDef>,
    slots: Vec<SlotSpec>,
    pub scale: ProficiencyScale<f64>,
}

impl Taxonomy {
    /// `skills` must list all 24 ids in order; `slots` must cover the six
    /// slot keys exactly once with nonempty skill sets and scenario pools.
    pub fn new(
        version: String,
        skills: Vec<SkillDef>,
        slots: Vec<SlotSpec>,
        scale: ProficiencyScale<f64>,
    ) -> Result<Self> {
        if skills.len() != SKILL_COUNT {
            return Err(GeaError::config(format!(
                "taxonomy must define {SKILL_COUNT} skills, found {}",
                skills.len()
            )));
        }
        for (i, skill) in skills.iter().enumerate() {
            if skill.id.index() != i {
                return Err(GeaError::config(format!(
                    "skill {} listed at position {}; skills must be in id order",
                    skill.id,
                    i + 1
                )));
            }
        }
        let mut slots = slots;
        slots.sort_by_key(|s| s.key);
        let expected = SlotKey::all();
        let keys: Vec<SlotKey> = slots.iter().map(|s| s.key).collect();
        if keys != expected {
            return Err(GeaError::config(format!(
                "slots must be exactly {:?}, found {:?}",
                expected.map(|k| k.to_string()),
                keys.iter().map(|k| k.to_string()).collect::<Vec<_>>()
            )));
        }
        for slot in &slots {
            if slot.applicable.is_empty() {
                return Err(GeaError::config(format!("slot {} tests no skills", slot.key)));
            }
            if slot.scenario_pool.is_empty() {
                return Err(GeaError::config(format!(
                    "slot {} has an empty scenario pool",
                    slot.key
                )));
            }
        }
        Ok(Taxonomy {
            version,
            skills,
            slots,
            scale,
        })
    }

    pub fn skills(&self) -> &[SkillDef] {
        &self.skills
    }

    pub fn skill(&self, id: SkillId) -> &SkillDef {
        &self.skills[id.index()]
    }

    pub fn slots(&self) -> &[SlotSpec] {
        &self.slots
    }

    pub fn slot(&self, key: SlotKey) -> Result<&SlotSpec> {
        self.slots
            .iter()
            .find(|s| s.key == key)
            .ok_or_else(|| GeaError::config(format!("no slot defined for {key}")))
    }

    pub fn slot_for(&self, stage: Stage, assignment: u8) -> Result<&SlotSpec> {
        self.slot(SlotKey::new(stage, assignment))
    }

    pub fn applicable_skills(&self, stage: Stage, assignment: u8) -> Result<SkillSet> {
        Ok(self.slot_for(stage, assignment)?.applicable)
    }

    /// Skills tested by at least one slot.
    pub fn covered_skills(&self) -> SkillSet {
        self.slots
            .iter()
            .fold(SkillSet::empty(), |acc, s| acc.union(s.applicable))
    }
}
