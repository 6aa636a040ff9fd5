use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GeaError, Result};

/// Number of skills in a skill vector.
pub const SKILL_COUNT: usize = 24;

/// One of the 24 skills, rendered `S01`..`S24`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SkillId(u8);

impl SkillId {
    pub fn new(number: u8) -> Result<Self> {
        if (1..=SKILL_COUNT as u8).contains(&number) {
            Ok(SkillId(number))
        } else {
            Err(GeaError::Domain(format!("skill number {number} outside 1..=24")))
        }
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < SKILL_COUNT, "skill index {index} out of range");
        SkillId(index as u8 + 1)
    }

    /// 1-based number.
    pub fn number(self) -> u8 {
        self.0
    }

    /// 0-based position in a skill vector.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = SkillId> {
        (1..=SKILL_COUNT as u8).map(SkillId)
    }
}

impl fmt::Display for SkillId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{:02}", self.0)
    }
}

impl FromStr for SkillId {
    type Err = GeaError;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('S')
            .filter(|d| d.len() == 2 && d.bytes().all(|b| b.is_ascii_digit()))
            .ok_or_else(|| GeaError::Domain(format!("malformed skill id `{s}`")))?;
        SkillId::new(digits.parse().expect("two ascii digits"))
    }
}

impl Serialize for SkillId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SkillId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered set of skills, stored as a bitmask.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SkillSet(u32);

impl SkillSet {
    pub fn empty() -> Self {
        SkillSet(0)
    }

    pub fn full() -> Self {
        SkillSet((1u32 << SKILL_COUNT) - 1)
    }

    pub fn insert(&mut self, id: SkillId) {
        self.0 |= 1 << id.index();
    }

    pub fn contains(&self, id: SkillId) -> bool {
        self.0 & (1 << id.index()) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: SkillSet) -> SkillSet {
        SkillSet(self.0 | other.0)
    }

    /// Members in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = SkillId> + '_ {
        SkillId::all().filter(move |id| self.contains(*id))
    }

    /// Parses entries such as `"S01"` or inclusive ranges `"S14-S21"`.
    pub fn parse_entries<S: AsRef<str>>(entries: &[S]) -> Result<SkillSet> {
        let mut set = SkillSet::empty();
        for entry in entries {
            let entry = entry.as_ref().trim();
            match entry.split_once('-') {
                Some((lo, hi)) => {
                    let lo: SkillId = lo.trim().parse()?;
                    let hi: SkillId = hi.trim().parse()?;
                    if lo > hi {
                        return Err(GeaError::Domain(format!("empty skill range `{entry}`")));
                    }
                    for n in lo.number()..=hi.number() {
                        set.insert(SkillId(n));
                    }
                }
                None => set.insert(entry.parse()?),
            }
        }
        Ok(set)
    }
}

impl FromIterator<SkillId> for SkillSet {
    fn from_iter<I: IntoIterator<Item = SkillId>>(iter: I) -> Self {
        let mut set = SkillSet::empty();
        for id in iter {
            set.insert(id);
        }
        set
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkillGroup {
    A,
    B,
    C,
    D,
}

/// Sampling sub-group used by archetype ranges.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subgroup {
    A,
    B,
    C1,
    C2,
    C3,
    D,
}

impl Subgroup {
    pub const ALL: [Subgroup; 6] = [
        Subgroup::A,
        Subgroup::B,
        Subgroup::C1,
        Subgroup::C2,
        Subgroup::C3,
        Subgroup::D,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillDef {
    pub id: SkillId,
    pub name: String,
    pub group: SkillGroup,
    pub subgroup: Subgroup,
    pub mandatory: bool,
    pub description: String,
    pub demonstrated_by: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skill_id_round_trips_through_text() {
        for id in SkillId::all() {
            assert_eq!(id.to_string().parse::<SkillId>().unwrap(), id);
        }
        assert_eq!(SkillId::new(5).unwrap().to_string(), "S05");
    }

    #[test]
    fn skill_id_rejects_garbage() {
        for bad in ["S00", "S25", "S1", "s01", "S001", "X01", ""] {
            assert!(bad.parse::<SkillId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn range_entries_expand_inclusively() {
        let set = SkillSet::parse_entries(&["S01-S04", "S06", "S09-S10"]).unwrap();
        let ids: Vec<String> = set.iter().map(|s| s.to_string()).collect();
        assert_eq!(ids, ["S01", "S02", "S03", "S04", "S06", "S09", "S10"]);
        assert!(SkillSet::parse_entries(&["S08-S03"]).is_err());
    }

    #[test]
    fn full_set_has_every_skill() {
        assert_eq!(SkillSet::full().len(), SKILL_COUNT);
        assert_eq!(SkillSet::full().iter().count(), SKILL_COUNT);
    }
}
