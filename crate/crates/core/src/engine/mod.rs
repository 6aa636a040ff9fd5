//! Session engine: scenario assignment, the generate-then-score task, score
//! aggregation, routing and the two run modes.

mod aggregate;
mod exec;
mod record;
mod routing;
mod runner;
pub mod scenario;
mod vector;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate_score, Rounding};
pub use exec::ordered_map;
pub use record::{
    completed, read_store, successful, FailureRecord, ResultRecord, StoreEntry, StoreLine, RECORD_SCHEMA,
};
pub use routing::{route_scores, route_stage1, terminal_level, SessionState, StageMean, Terminal};
pub use runner::{sessions_from_records, write_sessions_csv, Engine, RecordStore, RunOutcome};
pub use scenario::assign_scenario;
pub use vector::{SkillVector, SENTINEL};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every student attempts all six slots; routing is replayed afterwards.
    FullCoverage,
    /// Stage 1, then only the routed Stage 2 path.
    Adaptive,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::FullCoverage => "full-coverage",
            Mode::Adaptive => "adaptive",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full-coverage" => Ok(Mode::FullCoverage),
            "adaptive" => Ok(Mode::Adaptive),
            other => Err(format!("unknown mode `{other}` (expected full-coverage or adaptive)")),
        }
    }
}
