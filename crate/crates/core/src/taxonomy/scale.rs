//! Ordinal proficiency scale.
//!
//! Levels partition `[0, 1]`: every interval is lower-inclusive and
//! upper-exclusive except the last, which also contains 1.0.

use serde::{Deserialize, Serialize};

use crate::error::{GeaError, Result};
use crate::num::Real;

/// Ordinal position on the scale (0 = lowest).
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Level(pub u8);

impl Level {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn distance(self, other: Level) -> usize {
        self.0.abs_diff(other.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDef<T> {
    pub name: String,
    pub lower: T,
    pub upper: T,
    pub midpoint: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProficiencyScale<T> {
    levels: Vec<LevelDef<T>>,
}

impl<T: Real> ProficiencyScale<T> {
    /// Validates that the levels tile `[0, 1]` contiguously in ascending order.
    pub fn new(levels: Vec<LevelDef<T>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(GeaError::config("proficiency scale has no levels"));
        }
        if levels[0].lower != T::zero() {
            return Err(GeaError::config("first proficiency level must start at 0"));
        }
        if levels[levels.len() - 1].upper != T::one() {
            return Err(GeaError::config("last proficiency level must end at 1"));
        }
        for (i, level) in levels.iter().enumerate() {
            if level.lower >= level.upper {
                return Err(GeaError::config(format!(
                    "level `{}` has empty range [{}, {})",
                    level.name, level.lower, level.upper
                )));
            }
            if level.midpoint < level.lower || level.midpoint > level.upper {
                return Err(GeaError::config(format!(
                    "midpoint of level `{}` lies outside its range",
                    level.name
                )));
            }
            if let Some(next) = levels.get(i + 1) {
                if next.lower != level.upper {
                    return Err(GeaError::config(format!(
                        "levels `{}` and `{}` do not meet at a shared boundary",
                        level.name, next.name
                    )));
                }
            }
            if levels[..i].iter().any(|l| l.name == level.name) {
                return Err(GeaError::config(format!("duplicate level name `{}`", level.name)));
            }
        }
        if levels.len() > u8::MAX as usize {
            return Err(GeaError::config("too many proficiency levels"));
        }
        Ok(ProficiencyScale { levels })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[LevelDef<T>] {
        &self.levels
    }

    pub fn def(&self, level: Level) -> &LevelDef<T> {
        &self.levels[level.index()]
    }

    pub fn name(&self, level: Level) -> &str {
        &self.levels[level.index()].name
    }

    pub fn all(&self) -> impl Iterator<Item = Level> {
        (0..self.levels.len() as u8).map(Level)
    }

    /// Maps a unit-interval score to its level. The `-1.0` sentinel and
    /// anything else outside `[0, 1]` is a domain error.
    pub fn to_proficiency(&self, score: T) -> Result<Level> {
        if score.is_nan() || score < T::zero() || score > T::one() {
            return Err(GeaError::Domain(format!("score {score} is outside the unit interval")));
        }
        let last = self.levels.len() - 1;
        // Levels are few; a linear scan keeps the half-open rule obvious.
        let idx = self.levels.iter().position(|l| score < l.upper).unwrap_or(last);
        Ok(Level(idx as u8))
    }

    pub fn level_by_name(&self, name: &str) -> Result<Level> {
        self.levels
            .iter()
            .position(|l| l.name == name)
            .map(|i| Level(i as u8))
            .ok_or_else(|| GeaError::Domain(format!("unknown proficiency level `{name}`")))
    }

    pub fn level_distance(&self, a: &str, b: &str) -> Result<usize> {
        Ok(self.level_by_name(a)?.distance(self.level_by_name(b)?))
    }

    /// Re-expresses the scale over another scalar type.
    pub fn cast<U: Real>(&self) -> ProficiencyScale<U> {
        ProficiencyScale {
            levels: self
                .levels
                .iter()
                .map(|l| LevelDef {
                    name: l.name.clone(),
                    lower: U::lit(l.lower.as_f64()),
                    upper: U::lit(l.upper.as_f64()),
                    midpoint: U::lit(l.midpoint.as_f64()),
                })
                .collect(),
        }
    }
}
