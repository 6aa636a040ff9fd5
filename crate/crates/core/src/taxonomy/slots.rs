use std::fmt;

use serde::{Deserialize, Serialize};

use super::skills::SkillSet;

/// Routed Stage 2 path.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    High,
    Low,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Path::High => "high",
            Path::Low => "low",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "stage1")]
    Stage1,
    #[serde(rename = "stage2-high")]
    Stage2High,
    #[serde(rename = "stage2-low")]
    Stage2Low,
}

impl Stage {
    pub fn number(self) -> u8 {
        match self {
            Stage::Stage1 => 1,
            _ => 2,
        }
    }

    pub fn path(self) -> Option<Path> {
        match self {
            Stage::Stage1 => None,
            Stage::Stage2High => Some(Path::High),
            Stage::Stage2Low => Some(Path::Low),
        }
    }

    pub fn stage2(path: Path) -> Stage {
        match path {
            Path::High => Stage::Stage2High,
            Path::Low => Stage::Stage2Low,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Stage1 => "stage1",
            Stage::Stage2High => "stage2-high",
            Stage::Stage2Low => "stage2-low",
        })
    }
}

/// Identifies one of the six assignment slots.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotKey {
    pub stage: Stage,
    pub assignment: u8,
}

impl SlotKey {
    pub const fn new(stage: Stage, assignment: u8) -> Self {
        SlotKey { stage, assignment }
    }

    /// Canonical form used for hashing: `stage|path|assignment`.
    pub fn canonical(&self) -> String {
        let path = self.stage.path().map_or("none".to_string(), |p| p.to_string());
        format!("{}|{}|{}", self.stage.number(), path, self.assignment)
    }

    /// The six slots in session order.
    pub fn all() -> [SlotKey; 6] {
        [
            SlotKey::new(Stage::Stage1, 1),
            SlotKey::new(Stage::Stage1, 2),
            SlotKey::new(Stage::Stage2High, 1),
            SlotKey::new(Stage::Stage2High, 2),
            SlotKey::new(Stage::Stage2Low, 1),
            SlotKey::new(Stage::Stage2Low, 2),
        ]
    }
}

impl fmt::Display for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/a{}", self.stage, self.assignment)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotSpec {
    pub key: SlotKey,
    pub content: String,
    pub applicable: SkillSet,
    pub scenario_pool: Vec<String>,
}
