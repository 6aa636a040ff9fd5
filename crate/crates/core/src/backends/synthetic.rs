//! Model-free backends with a known response model.
//!
//! The synthetic generator writes the true skill slice into a plain-text
//! comment block instead of code; the synthetic scorer reads it back and
//! applies `observed = clamp01(max(true + bias_i + e, floor_i))` with
//! `e ~ N(0, sigma^2)`, or a fixed constant for degenerate skills. Because
//! the transformation is known, analytics can be checked against it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GenerationRequest, GeneratorBackend, QuestionRequest, ScoreReply, ScoreRequest, ScorerBackend};
use crate::engine::scenario::fnv1a64;
use crate::engine::{Rounding, SkillVector};
use crate::error::{GeaError, Result};
use crate::num::clamp01;
use crate::taxonomy::{SkillId, SlotSpec};

const ARTIFACT_HEADER: &str = "# --- synthetic submission v1 ---";
const ARTIFACT_FOOTER: &str = "# --- end synthetic submission ---";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScorerModel {
    pub bias: f64,
    pub sigma: f64,
    pub floor: f64,
    #[serde(default)]
    pub per_skill_bias: BTreeMap<SkillId, f64>,
    #[serde(default)]
    pub per_skill_floor: BTreeMap<SkillId, f64>,
    #[serde(default)]
    pub degenerate: BTreeMap<SkillId, f64>,
}

impl SyntheticScorerModel {
    /// Observed equals true.
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn shift(bias: f64) -> Self {
        SyntheticScorerModel {
            bias,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(GeaError::config("synthetic sigma must be finite and >= 0"));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.floor) || !self.per_skill_floor.values().all(|v| unit(*v)) {
            return Err(GeaError::config("synthetic floors must lie in [0, 1]"));
        }
        if !self.degenerate.values().all(|v| unit(*v)) {
            return Err(GeaError::config("degenerate skill constants must lie in [0, 1]"));
        }
        if !self.bias.is_finite() || !self.per_skill_bias.values().all(|v| v.is_finite()) {
            return Err(GeaError::config("synthetic biases must be finite"));
        }
        Ok(())
    }

    pub fn bias_for(&self, id: SkillId) -> f64 {
        self.per_skill_bias.get(&id).copied().unwrap_or(self.bias)
    }

    pub fn floor_for(&self, id: SkillId) -> f64 {
        self.per_skill_floor.get(&id).copied().unwrap_or(self.floor)
    }

    /// One observed value. Always consumes one normal variate so that
    /// degenerate skills do not shift the stream for the others.
    pub fn observe<R: Rng + ?Sized>(&self, id: SkillId, true_value: f64, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        if let Some(&c) = self.degenerate.get(&id) {
            return c;
        }
        clamp01((true_value + self.bias_for(id) + self.sigma * z).max(self.floor_for(id)))
    }
}

/// Applies the model to every skill in `true_slice`; other positions get the sentinel.
pub fn synthetic_score<R: Rng + ?Sized>(
    true_slice: &[(SkillId, f64)],
    model: &SyntheticScorerModel,
    rng: &mut R,
) -> Result<SkillVector> {
    let observed: Vec<(SkillId, f64)> = true_slice
        .iter()
        .map(|&(id, x)| (id, model.observe(id, x, rng)))
        .collect();
    SkillVector::from_values(&observed)
}

/// Embeds the slice as comment lines. `f64` display is shortest-round-trip,
/// so decoding is exact.
pub fn encode_artifact(slot: &SlotSpec, entity: &str, slice: &[(SkillId, f64)]) -> String {
    let mut out = String::new();
    out.push_str(ARTIFACT_HEADER);
    out.push('\n');
    out.push_str(&format!("# slot: {}\n# entity: {entity}\n", slot.key));
    for (id, v) in slice {
        out.push_str(&format!("# skill {id} {v}\n"));
    }
    out.push_str(ARTIFACT_FOOTER);
    out.push('\n');
    out
}

pub fn decode_artifact(text: &str) -> Result<Vec<(SkillId, f64)>> {
    let mut lines = text.lines();
    if !lines.any(|l| l.trim() == ARTIFACT_HEADER) {
        return Err(GeaError::validation("artifact", "missing synthetic submission header"));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line.trim();
        if line == ARTIFACT_FOOTER {
            return Ok(out);
        }
        if let Some(rest) = line.strip_prefix("# skill ") {
            let (id, v) = rest
                .split_once(' ')
                .ok_or_else(|| GeaError::validation("artifact", format!("malformed line `{line}`")))?;
            let value: f64 = v
                .parse()
                .map_err(|_| GeaError::validation("artifact", format!("malformed value `{v}`")))?;
            out.push((id.parse()?, value));
        }
    }
    Err(GeaError::validation("artifact", "missing synthetic submission footer"))
}

fn pascal(entity: &str) -> String {
    entity
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut c = w.chars();
            c.next()
                .map(|f| f.to_uppercase().chain(c).collect::<String>())
                .unwrap_or_default()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SyntheticGenerator;

impl GeneratorBackend for SyntheticGenerator {
    fn identity(&self) -> String {
        "synthetic-generator/v1".into()
    }

    fn question(&self, req: &QuestionRequest) -> Result<String> {
        let class = pascal(&req.entity);
        let bar = format!("+{}+", "-".repeat(class.len() + 2));
        Ok(format!(
            "{bar}\n| {class} |\n{bar}\n\n{} ({}): implement the class above for the {} scenario.\n",
            req.slot.key, req.slot.content, req.entity
        ))
    }

    fn generate(&self, req: &GenerationRequest) -> Result<String> {
        let slice: Vec<(SkillId, f64)> = req.profile.iter().map(|l| (l.skill, l.score)).collect();
        Ok(encode_artifact(&req.slot, &req.entity, &slice))
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticScorer {
    model: SyntheticScorerModel,
    seed: u64,
}

impl SyntheticScorer {
    pub fn new(model: SyntheticScorerModel, seed: u64) -> Self {
        SyntheticScorer { model, seed }
    }

    pub fn model(&self) -> &SyntheticScorerModel {
        &self.model
    }

    /// Independent stream per `(seed, student, slot, sample)`.
    fn rng_for(&self, req: &ScoreRequest) -> ChaCha8Rng {
        let key = format!(
            "{}|{}|{}|{}",
            self.seed,
            req.student_id,
            req.slot.key.canonical(),
            req.sample
        );
        ChaCha8Rng::seed_from_u64(fnv1a64(key.as_bytes()))
    }
}

impl ScorerBackend for SyntheticScorer {
    fn identity(&self) -> String {
        let fingerprint = serde_json::to_string(&(&self.model, self.seed)).expect("serializable");
        let digest = hex::encode(Sha256::digest(fingerprint.as_bytes()));
        format!("synthetic-scorer/v1:{}", &digest[..12])
    }

    fn score(&self, req: &ScoreRequest) -> Result<String> {
        let slice = decode_artifact(&req.artifact)?;
        let mut rng = self.rng_for(req);
        let vector = synthetic_score(&slice, &self.model, &mut rng)?;
        let reply = ScoreReply {
            score: vector.score(Rounding::HalfUp) as i64,
            feedback: "Synthetic scorer: observed vector drawn from the configured response model.".into(),
            skill_vector: vector.entries().to_vec(),
        };
        Ok(serde_json::to_string(&reply).expect("serializable"))
    }
}
