//! Routing threshold sensitivity.
//!
//! Students are re-routed from their stored per-slot scores, so only
//! students with all six slot scores can be re-routed at every threshold.
//! Everyone else is excluded and counted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cohort::StudentProfile;
use crate::engine::{route_scores, ResultRecord, Terminal};
use crate::error::{GeaError, Result};
use crate::taxonomy::{Path, SlotKey, Stage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub baseline: bool,
    pub flip_pct: f64,
    pub advanced_pct: f64,
    pub intermediate_pct: f64,
    pub beginner_pct: f64,
    pub misaligned_pct: f64,
    /// Terminal level per included student, in [`SweepTable::students`] order.
    #[serde(skip)]
    pub terminals: Vec<Terminal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub baseline_theta: f64,
    pub included: usize,
    pub excluded: usize,
    #[serde(skip)]
    pub students: Vec<String>,
    pub rows: Vec<SweepRow>,
}

struct Eligible<'a> {
    id: &'a str,
    archetype: &'a str,
    stage1: [u32; 2],
    high: [u32; 2],
    low: [u32; 2],
}

impl Eligible<'_> {
    fn route(&self, theta: f64) -> (Path, Terminal) {
        route_scores(
            self.stage1,
            |p| Some(if p == Path::High { self.high } else { self.low }),
            theta,
        )
        .expect("all scores present")
    }
}

fn pct(count: usize, n: usize) -> f64 {
    100.0 * count as f64 / n as f64
}

pub fn threshold_sweep(
    records: &[ResultRecord],
    cohort: &[StudentProfile],
    thetas: &[f64],
    baseline_theta: f64,
    expected: &BTreeMap<String, Terminal>,
) -> Result<SweepTable> {
    if thetas.is_empty() {
        return Err(GeaError::validation("thetas", "at least one threshold is required"));
    }
    let scores: BTreeMap<(&str, SlotKey), u32> = records
        .iter()
        .map(|r| ((r.student_id.as_str(), r.slot), r.score))
        .collect();
    let mut eligible = Vec::new();
    for p in cohort {
        let s = |stage, a| scores.get(&(p.student_id.as_str(), SlotKey::new(stage, a))).copied();
        let pair = |stage| Some([s(stage, 1)?, s(stage, 2)?]);
        if let (Some(stage1), Some(high), Some(low)) =
            (pair(Stage::Stage1), pair(Stage::Stage2High), pair(Stage::Stage2Low))
        {
            eligible.push(Eligible {
                id: &p.student_id,
                archetype: &p.archetype,
                stage1,
                high,
                low,
            });
        }
    }
    if eligible.is_empty() {
        return Err(GeaError::InsufficientData(
            "no student has scores for all six slots; the sweep needs a full-coverage run".into(),
        ));
    }
    let n = eligible.len();
    let baseline: Vec<Path> = eligible.iter().map(|e| e.route(baseline_theta).0).collect();
    let rows = thetas
        .iter()
        .map(|&theta| {
            let routed: Vec<(Path, Terminal)> = eligible.iter().map(|e| e.route(theta)).collect();
            let flips = routed.iter().zip(&baseline).filter(|((p, _), b)| p != *b).count();
            let count = |t| routed.iter().filter(|(_, x)| *x == t).count();
            let misaligned = eligible
                .iter()
                .zip(&routed)
                .filter(|(e, (_, t))| expected.get(e.archetype) != Some(t))
                .count();
            SweepRow {
                theta,
                baseline: theta == baseline_theta,
                flip_pct: pct(flips, n),
                advanced_pct: pct(count(Terminal::Advanced), n),
                intermediate_pct: pct(count(Terminal::Intermediate), n),
                beginner_pct: pct(count(Terminal::Beginner), n),
                misaligned_pct: pct(misaligned, n),
                terminals: routed.into_iter().map(|(_, t)| t).collect(),
            }
        })
        .collect();
    Ok(SweepTable {
        baseline_theta,
        included: n,
        excluded: cohort.len() - n,
        students: eligible.iter().map(|e| e.id.to_string()).collect(),
        rows,
    })
}
