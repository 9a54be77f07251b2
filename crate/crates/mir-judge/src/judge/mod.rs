//! Judge implementations behind one interface: a remote chat-completion
//! model, seeded random baselines, and a ground-truth oracle.

mod cache;
mod oracle;
mod random;
mod remote;

pub use cache::{CacheEntry, DiskCache};
pub use oracle::OracleJudge;
pub use random::{random_beat_verdict, random_label_verdict, RandomJudge};
pub use remote::{ChatTransport, RemoteConfig, RemoteJudge, ReqwestTransport, RetryPolicy, TransportError};

use crate::Task;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("remote judge unavailable after {attempts} attempts: {reason}")]
    RemoteUnavailable { attempts: usize, reason: String },
    #[error("remote judge timed out after {attempts} attempts")]
    Timeout { attempts: usize },
    #[error("remote quota exceeded (HTTP 429 after {attempts} attempts)")]
    QuotaExceeded { attempts: usize },
    #[error("missing API key: environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("malformed remote response: {0}")]
    BadResponse(String),
    #[error("no registered context for request {0}")]
    MissingContext(String),
    #[error("cache IO failure: {0}")]
    CacheIo(String),
}

/// Chat model parameters attached to a request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
}

impl Default for ModelParams {
    fn default() -> ModelParams {
        // Temperature 0 for repeatability.
        ModelParams { model: "gpt-3.5-turbo".to_string(), temperature: 0.0, max_tokens: None }
    }
}

/// One judging request: the prompt, its content hash, and model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub prompt: String,
    /// Content hash from the prompt engine (template version, task, level,
    /// serialized segment).
    pub prompt_hash: String,
    pub task: Task,
    pub params: ModelParams,
}

impl JudgeRequest {
    pub fn new(prompt: String, prompt_hash: String, task: Task, params: ModelParams) -> JudgeRequest {
        JudgeRequest { prompt, prompt_hash, task, params }
    }

    /// Content hash of prompt plus parameters; the downstream cache key.
    pub fn request_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.prompt_hash.as_bytes());
        hasher.update([0xff]);
        hasher.update(self.params.model.as_bytes());
        hasher.update([0xff]);
        hasher.update(self.params.temperature.to_le_bytes());
        hasher.update([0xff]);
        hasher.update(self.params.max_tokens.unwrap_or(0).to_le_bytes());
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
}

/// A judge's answer with audit metadata; `raw` is preserved byte-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub raw: String,
    pub judge_id: String,
    #[serde(with = "duration_millis")]
    pub latency: Duration,
    pub token_usage: Option<TokenUsage>,
    pub cache_hit: bool,
}

mod duration_millis {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        (d.as_millis() as u64).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// The interface contract all judges satisfy: raw text out, suitable for
/// verdict parsing. Random and oracle judges are deterministic given their
/// seed or ground truth.
pub trait Judge: Send + Sync {
    fn id(&self) -> &str;
    fn judge(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_hash_covers_parameters() {
        let base = JudgeRequest::new(
            "p".into(),
            "hash".into(),
            Task::Beat,
            ModelParams::default(),
        );
        let mut hotter = base.clone();
        hotter.params.temperature = 1.0;
        assert_ne!(base.request_hash(), hotter.request_hash());
        let mut other_model = base.clone();
        other_model.params.model = "other".into();
        assert_ne!(base.request_hash(), other_model.request_hash());
        assert_eq!(base.request_hash(), base.clone().request_hash());
    }
}
