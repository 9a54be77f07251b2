//! Remote chat-completion judge.
//!
//! Speaks the de-facto standard chat wire format: POST to the configured
//! endpoint with `{"model", "messages", "temperature"}` and a bearer token
//! from an environment variable; the verdict is the first choice's message
//! content. Retries transport errors and HTTP 429/5xx with exponential
//! backoff, and consults the disk cache before going to the network.

use super::{CacheEntry, DiskCache, Judge, JudgeError, JudgeRequest, JudgeResponse, TokenUsage};
use serde_json::Value;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant, SystemTime};

#[derive(Debug, Clone)]
pub enum TransportError {
    Timeout(String),
    Connect(String),
    Other(String),
}

impl TransportError {
    fn describe(&self) -> &str {
        match self {
            TransportError::Timeout(m) | TransportError::Connect(m) | TransportError::Other(m) => m,
        }
    }
}

/// The HTTP seam: one POST of a JSON body, returning (status, body).
pub trait ChatTransport: Send + Sync {
    fn send(
        &self,
        url: &str,
        api_key: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<(u16, String), TransportError>;
}

/// Production transport over a blocking reqwest client.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> ReqwestTransport {
        ReqwestTransport { client: reqwest::blocking::Client::new() }
    }
}

impl Default for ReqwestTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl ChatTransport for ReqwestTransport {
    fn send(
        &self,
        url: &str,
        api_key: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<(u16, String), TransportError> {
        let response = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .json(body)
            .timeout(timeout)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportError::Timeout(e.to_string())
                } else if e.is_connect() {
                    TransportError::Connect(e.to_string())
                } else {
                    TransportError::Other(e.to_string())
                }
            })?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| TransportError::Other(e.to_string()))?;
        Ok((status, text))
    }
}

/// Bounded retries with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: usize,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> RetryPolicy {
        RetryPolicy { attempts: 5, initial_backoff: Duration::from_secs(1) }
    }
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl Default for RemoteConfig {
    fn default() -> RemoteConfig {
        RemoteConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            api_key_env: "MIR_JUDGE_API_KEY".to_string(),
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
        }
    }
}

pub struct RemoteJudge {
    config: RemoteConfig,
    transport: Box<dyn ChatTransport>,
    cache: Option<DiskCache>,
    remote_calls: AtomicUsize,
}

impl RemoteJudge {
    pub fn new(config: RemoteConfig) -> RemoteJudge {
        RemoteJudge::with_transport(config, Box::new(ReqwestTransport::new()))
    }

    pub fn with_transport(config: RemoteConfig, transport: Box<dyn ChatTransport>) -> RemoteJudge {
        RemoteJudge { config, transport, cache: None, remote_calls: AtomicUsize::new(0) }
    }

    pub fn with_cache(mut self, cache: DiskCache) -> RemoteJudge {
        self.cache = Some(cache);
        self
    }

    /// Number of actual network calls made (cache hits excluded).
    pub fn remote_calls(&self) -> usize {
        self.remote_calls.load(Ordering::SeqCst)
    }

    fn api_key(&self) -> Result<String, JudgeError> {
        std::env::var(&self.config.api_key_env)
            .map_err(|_| JudgeError::MissingApiKey(self.config.api_key_env.clone()))
    }

    fn request_body(request: &JudgeRequest) -> Value {
        let mut body = serde_json::json!({
            "model": request.params.model,
            "messages": [{ "role": "user", "content": request.prompt }],
            "temperature": request.params.temperature,
        });
        if let Some(max_tokens) = request.params.max_tokens {
            body["max_tokens"] = Value::from(max_tokens);
        }
        body
    }

    fn extract_content(body: &str) -> Result<(String, Option<TokenUsage>), JudgeError> {
        let value: Value = serde_json::from_str(body)
            .map_err(|e| JudgeError::BadResponse(format!("not JSON: {e}")))?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| {
                JudgeError::BadResponse("missing choices[0].message.content".to_string())
            })?
            .to_string();
        let usage = match (
            value["usage"]["prompt_tokens"].as_u64(),
            value["usage"]["completion_tokens"].as_u64(),
        ) {
            (Some(p), Some(c)) => {
                Some(TokenUsage { prompt_tokens: p as u32, completion_tokens: c as u32 })
            }
            _ => None,
        };
        Ok((content, usage))
    }
}

impl Judge for RemoteJudge {
    fn id(&self) -> &str {
        "remote"
    }

    fn judge(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        let request_hash = request.request_hash();
        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.get(&request_hash) {
                return Ok(JudgeResponse {
                    raw: entry.raw,
                    judge_id: entry.judge_id,
                    latency: Duration::ZERO,
                    token_usage: entry.token_usage,
                    cache_hit: true,
                });
            }
        }

        let api_key = self.api_key()?;
        let body = Self::request_body(request);
        let started = Instant::now();
        let mut backoff = self.config.retry.initial_backoff;
        let attempts = self.config.retry.attempts.max(1);
        let mut last_failure: Option<JudgeError> = None;

        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            self.remote_calls.fetch_add(1, Ordering::SeqCst);
            match self.transport.send(&self.config.endpoint, &api_key, &body, self.config.timeout) {
                Ok((status, text)) if (200..300).contains(&status) => {
                    let (content, token_usage) = Self::extract_content(&text)?;
                    if let Some(cache) = &self.cache {
                        cache.put(&CacheEntry {
                            request_hash: request_hash.clone(),
                            prompt_hash: request.prompt_hash.clone(),
                            model: request.params.model.clone(),
                            temperature: request.params.temperature,
                            raw: content.clone(),
                            judge_id: self.id().to_string(),
                            token_usage,
                            created_unix: SystemTime::now()
                                .duration_since(SystemTime::UNIX_EPOCH)
                                .map(|d| d.as_secs())
                                .unwrap_or(0),
                        })?;
                    }
                    return Ok(JudgeResponse {
                        raw: content,
                        judge_id: self.id().to_string(),
                        latency: started.elapsed(),
                        token_usage,
                        cache_hit: false,
                    });
                }
                Ok((status, text)) if status == 429 || status >= 500 => {
                    // Retryable HTTP failure.
                    last_failure = Some(if status == 429 {
                        JudgeError::QuotaExceeded { attempts: attempt + 1 }
                    } else {
                        JudgeError::RemoteUnavailable {
                            attempts: attempt + 1,
                            reason: format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()),
                        }
                    });
                }
                Ok((status, text)) => {
                    // Non-retryable client error.
                    return Err(JudgeError::RemoteUnavailable {
                        attempts: attempt + 1,
                        reason: format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()),
                    });
                }
                Err(TransportError::Timeout(_)) => {
                    last_failure = Some(JudgeError::Timeout { attempts: attempt + 1 });
                }
                Err(err) => {
                    last_failure = Some(JudgeError::RemoteUnavailable {
                        attempts: attempt + 1,
                        reason: err.describe().to_string(),
                    });
                }
            }
        }
        Err(last_failure.unwrap_or(JudgeError::RemoteUnavailable {
            attempts,
            reason: "no attempt recorded".to_string(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::ModelParams;
    use crate::Task;
    use std::sync::Mutex;

    struct ScriptedTransport {
        responses: Mutex<Vec<Result<(u16, String), TransportError>>>,
        calls: AtomicUsize,
    }

    impl ScriptedTransport {
        fn new(responses: Vec<Result<(u16, String), TransportError>>) -> ScriptedTransport {
            ScriptedTransport { responses: Mutex::new(responses), calls: AtomicUsize::new(0) }
        }
    }

    impl ChatTransport for ScriptedTransport {
        fn send(
            &self,
            _url: &str,
            _key: &str,
            _body: &Value,
            _timeout: Duration,
        ) -> Result<(u16, String), TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let mut responses = self.responses.lock().unwrap();
            if responses.is_empty() {
                Err(TransportError::Connect("script exhausted".to_string()))
            } else {
                responses.remove(0)
            }
        }
    }

    fn ok_body(content: &str) -> String {
        serde_json::json!({
            "choices": [{ "message": { "role": "assistant", "content": content } }],
            "usage": { "prompt_tokens": 10, "completion_tokens": 5 }
        })
        .to_string()
    }

    fn request() -> JudgeRequest {
        JudgeRequest::new("prompt".into(), "ph".into(), Task::Key, ModelParams::default())
    }

    fn fast_config() -> RemoteConfig {
        RemoteConfig {
            endpoint: "http://test.invalid/v1/chat/completions".into(),
            api_key_env: "MIR_JUDGE_TEST_KEY".into(),
            timeout: Duration::from_millis(100),
            retry: RetryPolicy { attempts: 3, initial_backoff: Duration::from_millis(1) },
        }
    }

    fn with_key<T>(f: impl FnOnce() -> T) -> T {
        // Serialize env mutation across tests in this module.
        static ENV_LOCK: Mutex<()> = Mutex::new(());
        let _guard = ENV_LOCK.lock().unwrap();
        std::env::set_var("MIR_JUDGE_TEST_KEY", "test-key");
        let out = f();
        std::env::remove_var("MIR_JUDGE_TEST_KEY");
        out
    }

    #[test]
    fn success_extracts_first_choice_content() {
        with_key(|| {
            let transport = ScriptedTransport::new(vec![Ok((200, ok_body("{\"judgment\": \"correct\"}")))]);
            let judge = RemoteJudge::with_transport(fast_config(), Box::new(transport));
            let response = judge.judge(&request()).unwrap();
            assert_eq!(response.raw, "{\"judgment\": \"correct\"}");
            assert_eq!(judge.remote_calls(), 1);
            assert!(!response.cache_hit);
            assert_eq!(response.token_usage.unwrap().prompt_tokens, 10);
        });
    }

    #[test]
    fn retries_transient_failures_then_succeeds() {
        with_key(|| {
            let transport = ScriptedTransport::new(vec![
                Ok((503, "overloaded".into())),
                Err(TransportError::Connect("refused".into())),
                Ok((200, ok_body("ok"))),
            ]);
            let judge = RemoteJudge::with_transport(fast_config(), Box::new(transport));
            let response = judge.judge(&request()).unwrap();
            assert_eq!(response.raw, "ok");
            assert_eq!(judge.remote_calls(), 3);
        });
    }

    #[test]
    fn exhausted_retries_surface_unavailable() {
        with_key(|| {
            let transport = ScriptedTransport::new(vec![
                Err(TransportError::Connect("refused".into())),
                Err(TransportError::Connect("refused".into())),
                Err(TransportError::Connect("refused".into())),
            ]);
            let judge = RemoteJudge::with_transport(fast_config(), Box::new(transport));
            match judge.judge(&request()) {
                Err(JudgeError::RemoteUnavailable { attempts, .. }) => assert_eq!(attempts, 3),
                other => panic!("expected RemoteUnavailable, got {other:?}"),
            }
            assert_eq!(judge.remote_calls(), 3);
        });
    }

    #[test]
    fn persistent_429_becomes_quota_exceeded() {
        with_key(|| {
            let transport = ScriptedTransport::new(vec![
                Ok((429, "slow down".into())),
                Ok((429, "slow down".into())),
                Ok((429, "slow down".into())),
            ]);
            let judge = RemoteJudge::with_transport(fast_config(), Box::new(transport));
            assert!(matches!(judge.judge(&request()), Err(JudgeError::QuotaExceeded { .. })));
        });
    }

    #[test]
    fn client_errors_do_not_retry() {
        with_key(|| {
            let transport = ScriptedTransport::new(vec![Ok((400, "bad request".into()))]);
            let judge = RemoteJudge::with_transport(fast_config(), Box::new(transport));
            assert!(judge.judge(&request()).is_err());
            assert_eq!(judge.remote_calls(), 1);
        });
    }

    #[test]
    fn cache_serves_repeats_without_network() {
        with_key(|| {
            let dir = tempfile::tempdir().unwrap();
            let transport = ScriptedTransport::new(vec![Ok((200, ok_body("cached answer")))]);
            let judge = RemoteJudge::with_transport(fast_config(), Box::new(transport))
                .with_cache(DiskCache::new(dir.path()));
            let first = judge.judge(&request()).unwrap();
            let second = judge.judge(&request()).unwrap();
            assert_eq!(first.raw, second.raw);
            assert!(!first.cache_hit);
            assert!(second.cache_hit);
            assert_eq!(judge.remote_calls(), 1);
        });
    }

    #[test]
    fn missing_api_key_is_reported() {
        let transport = ScriptedTransport::new(vec![]);
        let mut config = fast_config();
        config.api_key_env = "MIR_JUDGE_DEFINITELY_UNSET".into();
        let judge = RemoteJudge::with_transport(config, Box::new(transport));
        assert!(matches!(judge.judge(&request()), Err(JudgeError::MissingApiKey(_))));
    }
}
