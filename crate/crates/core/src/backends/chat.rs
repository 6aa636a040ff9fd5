//! OpenAI-compatible chat-completion transport.
//!
//! The credential comes from an environment variable named in config; it is
//! never read from or written to a config file.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{GenerationRequest, GeneratorBackend, QuestionRequest, ScoreRequest, ScorerBackend};
use crate::error::{Result, TransportError};
use crate::store::sha256_hex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatEndpointConfig {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub api_key_env: String,
    pub timeout_secs: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): doubling, capped.
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.min(32)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 500,
            max_delay_ms: 8000,
        }
    }
}

enum Attempt {
    Done(String),
    Retry(TransportError),
    Fatal(TransportError),
}

#[derive(Clone, Debug)]
pub struct ChatClient {
    config: ChatEndpointConfig,
    retry: RetryPolicy,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(config: ChatEndpointConfig, retry: RetryPolicy, api_key: String) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| TransportError::Connect {
                endpoint: config.endpoint.clone(),
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(ChatClient {
            config,
            retry,
            api_key,
            http,
        })
    }

    pub fn from_env(config: ChatEndpointConfig, retry: RetryPolicy) -> Result<Self> {
        let key = std::env::var(&config.api_key_env)
            .map_err(|_| TransportError::MissingCredential(config.api_key_env.clone()))?;
        Self::new(config, retry, key)
    }

    /// Shorter timeout, for tests against a slow mock.
    pub fn with_timeout(mut self, timeout: Duration) -> Result<Self> {
        self.http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Connect {
                endpoint: self.config.endpoint.clone(),
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(self)
    }

    pub fn config(&self) -> &ChatEndpointConfig {
        &self.config
    }

    pub fn identity(&self) -> String {
        format!(
            "chat:{}@{} t={}",
            self.config.model, self.config.endpoint, self.config.temperature
        )
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }

    fn attempt(&self, body: &str, attempts: u32) -> Attempt {
        let endpoint = self.config.endpoint.clone();
        let sent = self
            .http
            .post(self.url())
            .bearer_auth(&self.api_key)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .send();
        let response = match sent {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(TransportError::Timeout { endpoint, attempts }),
            Err(e) => {
                return Attempt::Retry(TransportError::Connect {
                    endpoint,
                    attempts,
                    message: e.to_string(),
                })
            }
        };
        let status = response.status().as_u16();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retry(TransportError::Timeout { endpoint, attempts }),
            Err(e) => {
                return Attempt::Retry(TransportError::Connect {
                    endpoint,
                    attempts,
                    message: e.to_string(),
                })
            }
        };
        tracing::debug!(status, response_sha256 = %sha256_hex(text.as_bytes()), "chat response");
        match status {
            200..=299 => match extract_content(&text) {
                Ok(content) => Attempt::Done(content),
                Err(message) => Attempt::Fatal(TransportError::MalformedBody {
                    endpoint,
                    message,
                    raw: text,
                }),
            },
            401 | 403 => Attempt::Fatal(TransportError::Auth { endpoint, status }),
            408 | 429 | 500..=599 => Attempt::Retry(TransportError::Status {
                endpoint,
                status,
                attempts,
                body: text,
            }),
            _ => Attempt::Fatal(TransportError::Status {
                endpoint,
                status,
                attempts,
                body: text,
            }),
        }
    }

    /// One completion for a single user message, retrying transient failures.
    pub fn complete(&self, prompt: &str) -> Result<String> {
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        })
        .to_string();
        tracing::debug!(request_sha256 = %sha256_hex(body.as_bytes()), endpoint = %self.config.endpoint, "chat request");
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, attempts) {
                Attempt::Done(content) => return Ok(content),
                Attempt::Fatal(e) => return Err(e.into()),
                Attempt::Retry(e) if attempts > self.retry.max_retries => return Err(e.into()),
                Attempt::Retry(e) => {
                    let wait = self.retry.delay(attempts - 1);
                    tracing::warn!(error = %e, attempt = attempts, ?wait, "transient chat failure, retrying");
                    std::thread::sleep(wait);
                }
            }
        }
    }
}

fn extract_content(text: &str) -> std::result::Result<String, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| "missing choices[0].message.content".to_string())
}

pub fn chat_call(client: &ChatClient, prompt: &str) -> Result<String> {
    client.complete(prompt)
}

#[derive(Clone, Debug)]
pub struct ChatGenerator {
    client: ChatClient,
}

impl ChatGenerator {
    pub fn new(client: ChatClient) -> Self {
        ChatGenerator { client }
    }
}

impl GeneratorBackend for ChatGenerator {
    fn identity(&self) -> String {
        self.client.identity()
    }

    fn question(&self, req: &QuestionRequest) -> Result<String> {
        self.client.complete(&req.prompt)
    }

    fn generate(&self, req: &GenerationRequest) -> Result<String> {
        self.client.complete(&req.prompt)
    }
}

#[derive(Clone, Debug)]
pub struct ChatScorer {
    client: ChatClient,
}

impl ChatScorer {
    pub fn new(client: ChatClient) -> Self {
        ChatScorer { client }
    }
}

impl ScorerBackend for ChatScorer {
    fn identity(&self) -> String {
        self.client.identity()
    }

    fn score(&self, req: &ScoreRequest) -> Result<String> {
        self.client.complete(&req.prompt)
    }
}
