//! Strict parsing of scorer replies.
//!
//! A reply is one JSON object `{"score": int, "feedback": str,
//! "skill_vector": [24 numbers]}` with no other keys. If the body is not a
//! bare object, exactly one brace-delimited object may be extracted from
//! surrounding text; zero or several is an error.

use serde::{Deserialize, Serialize};

use crate::engine::{Rounding, SkillVector};
use crate::error::{GeaError, Result};
use crate::taxonomy::SkillSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreReply {
    pub score: i64,
    pub feedback: String,
    pub skill_vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReply {
    pub vector: SkillVector,
    /// Derived from the vector; authoritative.
    pub score: u32,
    /// The scorer's own integer, kept only when it disagrees.
    pub reported_score: Option<i64>,
    pub feedback: String,
}

/// Brace-balanced top-level `{...}` spans, ignoring braces inside strings.
fn object_spans(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let (mut depth, mut start) = (0usize, 0usize);
    let (mut in_str, mut escaped) = (false, false);
    for (i, &b) in bytes.iter().enumerate() {
        if in_str {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' if depth > 0 => in_str = true,
            b'{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            b'}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    spans.push(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    spans
}

fn decode(raw: &str) -> Result<ScoreReply> {
    let trimmed = raw.trim();
    let body = if trimmed.starts_with('{') && trimmed.ends_with('}') && object_spans(trimmed).len() == 1 {
        trimmed
    } else {
        let spans = object_spans(raw);
        match spans.len() {
            1 => spans[0],
            0 => return Err(GeaError::validation("reply", "no JSON object found")),
            n => {
                return Err(GeaError::validation(
                    "reply",
                    format!("{n} JSON objects found, expected exactly one"),
                ))
            }
        }
    };
    serde_json::from_str(body).map_err(|e| {
        let msg = e.to_string();
        let field = ["score", "feedback", "skill_vector"]
            .into_iter()
            .find(|f| msg.contains(&format!("`{f}`")))
            .unwrap_or("reply");
        GeaError::validation(field, msg)
    })
}

pub fn parse_score_reply(raw: &str, applicable: SkillSet, rounding: Rounding) -> Result<ParsedReply> {
    let reply = decode(raw)?;
    let vector = SkillVector::new(reply.skill_vector, applicable)?;
    let score = vector.score(rounding);
    let reported_score = if reply.score == score as i64 {
        None
    } else {
        tracing::warn!(
            reported = reply.score,
            derived = score,
            "scorer-reported score disagrees with its skill vector; using the vector"
        );
        Some(reply.score)
    };
    Ok(ParsedReply {
        vector,
        score,
        reported_score,
        feedback: reply.feedback,
    })
}
