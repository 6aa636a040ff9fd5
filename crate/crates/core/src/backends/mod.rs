//! Generator and scorer backends.
//!
//! Generator and scorer identities are independent: any generator can be
//! paired with any scorer, and every record carries both identities.

pub mod chat;
pub mod mock;
mod multi;
pub mod prompts;
mod reply;
pub mod synthetic;

use serde::{Deserialize, Serialize};

pub use chat::{chat_call, ChatClient, ChatEndpointConfig, ChatGenerator, ChatScorer, RetryPolicy};
pub use multi::{multi_sample_score, MultiSample};
pub use prompts::PromptBundle;
pub use reply::{parse_score_reply, ParsedReply, ScoreReply};
pub use synthetic::{SyntheticGenerator, SyntheticScorer, SyntheticScorerModel};

use crate::cohort::ProfileLine;
use crate::error::Result;
use crate::taxonomy::SlotSpec;

#[derive(Clone, Debug)]
pub struct QuestionRequest {
    pub student_id: String,
    pub slot: SlotSpec,
    pub entity: String,
    pub prompt: String,
}

#[derive(Clone, Debug)]
pub struct GenerationRequest {
    pub student_id: String,
    pub slot: SlotSpec,
    pub entity: String,
    pub question: String,
    pub profile: Vec<ProfileLine>,
    pub prompt: String,
}

#[derive(Clone, Debug)]
pub struct ScoreRequest {
    pub student_id: String,
    pub slot: SlotSpec,
    pub question: String,
    pub artifact: String,
    pub prompt: String,
    /// Index of this call among repeated scorings of the same artifact.
    pub sample: u32,
}

/// Simulates the student: writes assignment text and submissions.
pub trait GeneratorBackend: Send + Sync {
    fn identity(&self) -> String;
    fn question(&self, req: &QuestionRequest) -> Result<String>;
    fn generate(&self, req: &GenerationRequest) -> Result<String>;
}

/// Scores a submission; returns the raw reply text for strict parsing.
pub trait ScorerBackend: Send + Sync {
    fn identity(&self) -> String;
    fn score(&self, req: &ScoreRequest) -> Result<String>;
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Synthetic,
    Chat,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "synthetic" => Ok(BackendKind::Synthetic),
            "chat" => Ok(BackendKind::Chat),
            other => Err(format!("unknown backend `{other}` (expected synthetic or chat)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub parallelism: usize,
    pub retry: RetryPolicy,
    pub synthetic: SyntheticScorerModel,
    pub generator: ChatEndpointConfig,
    pub scorer: ChatEndpointConfig,
}

/// Builds the configured generator and scorer pair.
pub fn build_backends(
    config: &BackendConfig,
    backend_seed: u64,
) -> Result<(Box<dyn GeneratorBackend>, Box<dyn ScorerBackend>)> {
    Ok(match config.kind {
        BackendKind::Synthetic => (
            Box::new(SyntheticGenerator),
            Box::new(SyntheticScorer::new(config.synthetic.clone(), backend_seed)),
        ),
        BackendKind::Chat => (
            Box::new(ChatGenerator::new(ChatClient::from_env(
                config.generator.clone(),
                config.retry.clone(),
            )?)),
            Box::new(ChatScorer::new(ChatClient::from_env(
                config.scorer.clone(),
                config.retry.clone(),
            )?)),
        ),
    })
}
