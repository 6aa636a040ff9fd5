//! Repeated scoring of one artifact.

use super::reply::parse_score_reply;
use super::{ScoreRequest, ScorerBackend};
use crate::engine::{Rounding, SkillVector, SENTINEL};
use crate::error::{GeaError, Result};
use crate::taxonomy::SKILL_COUNT;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiSample {
    pub mean: SkillVector,
    /// Per-skill sample variance (n - 1); sentinel at non-applicable positions.
    pub variance: Vec<f64>,
    pub flagged: bool,
    /// Feedback from the first sample.
    pub feedback: String,
    /// Raw replies in sample order.
    pub raw: Vec<String>,
}

/// Scores `request` `k` times with sample indices `0..k`. Flagged iff any
/// applicable skill's sample variance exceeds `tau`.
pub fn multi_sample_score(
    request: &ScoreRequest,
    k: u32,
    scorer: &dyn ScorerBackend,
    tau: f64,
    rounding: Rounding,
) -> Result<MultiSample> {
    if k < 2 {
        return Err(GeaError::validation(
            "samples",
            format!("multi-sample scoring needs k >= 2, got {k}"),
        ));
    }
    let applicable = request.slot.applicable;
    let mut vectors = Vec::with_capacity(k as usize);
    let mut raw = Vec::with_capacity(k as usize);
    let mut feedback = String::new();
    for sample in 0..k {
        let req = ScoreRequest {
            sample,
            ..request.clone()
        };
        let reply = scorer.score(&req)?;
        let parsed = parse_score_reply(&reply, applicable, rounding)?;
        if sample == 0 {
            feedback = parsed.feedback;
        }
        vectors.push(parsed.vector);
        raw.push(reply);
    }
    let n = k as f64;
    let mut mean = vec![SENTINEL; SKILL_COUNT];
    let mut variance = vec![SENTINEL; SKILL_COUNT];
    for id in applicable.iter() {
        let xs: Vec<f64> = vectors.iter().map(|v| v.get(id).expect("validated")).collect();
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        mean[id.index()] = m.clamp(0.0, 1.0);
        variance[id.index()] = var;
    }
    let flagged = applicable.iter().any(|id| variance[id.index()] > tau);
    Ok(MultiSample {
        mean: SkillVector::new(mean, applicable)?,
        variance,
        flagged,
        feedback,
        raw,
    })
}
