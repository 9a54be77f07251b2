//! Ground-truth oracle judge.
//!
//! The runner precomputes the exact verdict text for each request from the
//! corruption log; the oracle just returns it. Scoring an oracle run checks
//! the whole prompt/parse/metric path end to end.

use super::{Judge, JudgeError, JudgeRequest, JudgeResponse};
use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

#[derive(Default)]
pub struct OracleJudge {
    verdicts: Mutex<HashMap<String, String>>,
}

impl OracleJudge {
    pub fn new() -> OracleJudge {
        OracleJudge::default()
    }

    /// Registers the exact verdict text for a request's prompt hash.
    pub fn register_verdict(&self, prompt_hash: &str, verdict_json: String) {
        self.verdicts
            .lock()
            .expect("verdict lock")
            .insert(prompt_hash.to_string(), verdict_json);
    }
}

impl Judge for OracleJudge {
    fn id(&self) -> &str {
        "oracle"
    }

    fn judge(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        let raw = self
            .verdicts
            .lock()
            .expect("verdict lock")
            .get(&request.prompt_hash)
            .cloned()
            .ok_or_else(|| JudgeError::MissingContext(request.prompt_hash.clone()))?;
        Ok(JudgeResponse {
            raw,
            judge_id: self.id().to_string(),
            latency: Duration::ZERO,
            token_usage: None,
            cache_hit: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::ModelParams;
    use crate::Task;

    #[test]
    fn returns_registered_verdict() {
        let oracle = OracleJudge::new();
        oracle.register_verdict("h", r#"{"incorrect_chords": [2, 7]}"#.to_string());
        let request =
            JudgeRequest::new("p".into(), "h".into(), Task::Chord, ModelParams::default());
        let response = oracle.judge(&request).unwrap();
        assert_eq!(response.raw, r#"{"incorrect_chords": [2, 7]}"#);
        assert_eq!(response.judge_id, "oracle");
    }
}
