//! Seeded synthetic student cohorts.
//!
//! Each profile is drawn from an archetype: for every skill a value is taken
//! uniformly from the archetype's range for the skill's sub-group, Gaussian
//! noise is added and the result is clamped to `[0, 1]`. Archetype weights
//! are apportioned to integer counts with the largest-remainder method.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GeaError, Result};
use crate::num::clamp01;
use crate::store;
use crate::taxonomy::{SkillId, SkillSet, Subgroup, Taxonomy, SKILL_COUNT};

/// The only generator currently implemented. Changing the sampling code in a
/// way that alters streams must bump this name.
pub const RNG_ALGORITHM: &str = "chacha8/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    /// Percentage of the cohort.
    pub weight: u32,
    pub ranges: BTreeMap<Subgroup, (f64, f64)>,
}

impl Archetype {
    pub fn validate(&self) -> Result<()> {
        for sub in Subgroup::ALL {
            let (lo, hi) = self
                .ranges
                .get(&sub)
                .copied()
                .ok_or_else(|| GeaError::config(format!("archetype `{}` has no range for {sub:?}", self.name)))?;
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(GeaError::config(format!(
                    "archetype `{}` range {sub:?} = [{lo}, {hi}] violates 0 <= lo <= hi <= 1",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn range(&self, sub: Subgroup) -> (f64, f64) {
        self.ranges[&sub]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortConfig {
    pub rng: String,
    pub noise_sigma: f64,
    pub id_width: usize,
    pub archetypes: Vec<Archetype>,
}

impl CohortConfig {
    pub fn new(rng: String, noise_sigma: f64, id_width: usize, archetypes: Vec<Archetype>) -> Result<Self> {
        if rng != RNG_ALGORITHM {
            return Err(GeaError::config(format!(
                "unsupported cohort rng `{rng}`; this build implements `{RNG_ALGORITHM}`"
            )));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(GeaError::config("cohort noise_sigma must be finite and >= 0"));
        }
        if archetypes.is_empty() {
            return Err(GeaError::config("cohort defines no archetypes"));
        }
        for a in &archetypes {
            a.validate()?;
        }
        let total: u32 = archetypes.iter().map(|a| a.weight).sum();
        if total != 100 {
            return Err(GeaError::config(format!(
                "archetype weights sum to {total}, expected 100"
            )));
        }
        Ok(CohortConfig {
            rng,
            noise_sigma,
            id_width,
            archetypes,
        })
    }

    pub fn archetype(&self, name: &str) -> Option<&Archetype> {
        self.archetypes.iter().find(|a| a.name == name)
    }
}

/// Per-skill, per-level natural-language descriptors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DescriptorBank {
    entries: BTreeMap<SkillId, BTreeMap<String, String>>,
}

impl DescriptorBank {
    pub fn new(entries: BTreeMap<SkillId, BTreeMap<String, String>>) -> Self {
        DescriptorBank { entries }
    }

    pub fn get(&self, skill: SkillId, level: &str) -> Result<&str> {
        self.entries
            .get(&skill)
            .and_then(|m| m.get(level))
            .map(String::as_str)
            .ok_or_else(|| GeaError::config(format!("no descriptor for {skill} at level `{level}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub student_id: String,
    pub archetype: String,
    /// True skill vector, indexed by `SkillId::index`.
    pub skills: Vec<f64>,
}

impl StudentProfile {
    pub fn skill(&self, id: SkillId) -> f64 {
        self.skills[id.index()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.skills.len() != SKILL_COUNT {
            return Err(GeaError::validation(
                "skills",
                format!("profile {} has {} skills", self.student_id, self.skills.len()),
            ));
        }
        if let Some(v) = self.skills.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(GeaError::validation(
                "skills",
                format!("profile {} has value {v} outside [0, 1]", self.student_id),
            ));
        }
        Ok(())
    }
}

/// One line of the profile block shown to the generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileLine {
    pub skill: SkillId,
    pub name: String,
    pub score: f64,
    pub level: String,
    pub descriptor: String,
}

/// Draws one profile. Consumes exactly two variates per skill (uniform, then
/// standard normal) so streams stay aligned regardless of `noise_sigma`.
pub fn sample_profile<R: Rng + ?Sized>(
    student_id: String,
    archetype: &Archetype,
    taxonomy: &Taxonomy,
    noise_sigma: f64,
    rng: &mut R,
) -> StudentProfile {
    let skills = taxonomy
        .skills()
        .iter()
        .map(|def| {
            let (lo, hi) = archetype.range(def.subgroup);
            let base: f64 = rng.random_range(lo..=hi);
            let z: f64 = rng.sample(StandardNormal);
            clamp01(base + noise_sigma * z)
        })
        .collect();
    StudentProfile {
        student_id,
        archetype: archetype.name.clone(),
        skills,
    }
}

/// Largest-remainder apportionment of percentage weights over `n` seats.
/// Ties in the remainder go to the larger weight, then the earlier entry.
pub fn apportion(weights: &[u32], n: usize) -> Vec<usize> {
    let total: u64 = weights.iter().map(|&w| w as u64).sum();
    if total == 0 || weights.is_empty() {
        return vec![0; weights.len()];
    }
    let mut counts: Vec<usize> = Vec::with_capacity(weights.len());
    // remainder numerators over `total`, exact integer arithmetic
    let mut rems: Vec<(u64, u32, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let num = w as u64 * n as u64;
        counts.push((num / total) as usize);
        rems.push((num % total, w, i));
    }
    let assigned: usize = counts.iter().sum();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    for &(_, _, i) in rems.iter().take(n - assigned) {
        counts[i] += 1;
    }
    counts
}

pub fn student_id(ordinal: usize, width: usize) -> String {
    format!("{ordinal:0width$}")
}

/// Samples `n` profiles from one RNG stream seeded with `seed`. Students are
/// numbered from 1 in archetype-table order.
pub fn sample_cohort(n: usize, seed: u64, config: &CohortConfig, taxonomy: &Taxonomy) -> Vec<StudentProfile> {
    let weights: Vec<u32> = config.archetypes.iter().map(|a| a.weight).collect();
    let counts = apportion(&weights, n);
    let width = config.id_width.max(n.to_string().len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for (archetype, &count) in config.archetypes.iter().zip(&counts) {
        for _ in 0..count {
            let id = student_id(out.len() + 1, width);
            out.push(sample_profile(id, archetype, taxonomy, config.noise_sigma, &mut rng));
        }
    }
    out
}

/// Profile lines for `skills`, in id order.
pub fn describe_profile(
    profile: &StudentProfile,
    skills: SkillSet,
    taxonomy: &Taxonomy,
    bank: &DescriptorBank,
) -> Result<Vec<ProfileLine>> {
    skills
        .iter()
        .map(|id| {
            let score = profile.skill(id);
            let level = taxonomy.scale.to_proficiency(score)?;
            let level = taxonomy.scale.name(level).to_string();
            let descriptor = bank.get(id, &level)?.to_string();
            Ok(ProfileLine {
                skill: id,
                name: taxonomy.skill(id).name.clone(),
                score,
                level,
                descriptor,
            })
        })
        .collect()
}

pub fn write_cohort(path: &FsPath, profiles: &[StudentProfile]) -> Result<()> {
    store::write_lines(path, profiles)
}

pub fn read_cohort(path: &FsPath) -> Result<Vec<StudentProfile>> {
    let profiles: Vec<StudentProfile> = store::read_lines(path)?;
    for p in &profiles {
        p.validate()?;
    }
    Ok(profiles)
}
