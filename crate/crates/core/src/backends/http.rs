//! OpenAI-compatible and Anthropic-compatible chat-completion adapters.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::policy::{BackendPolicy, ConcurrencyGate, Sleeper, ThreadSleeper, TokenBucket};
use super::{AttemptRecord, AuditLog, BackendError, ChatBackend, ChatRequest, Completion, Usage};
use crate::domain::ModelSpec;

pub const ANTHROPIC_VERSION: &str = "2023-06-01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dialect {
    OpenaiCompatible,
    AnthropicCompatible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Value,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// A single POST. `Err` means no HTTP status was obtained.
pub trait Transport: Send + Sync {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().http_status_as_error(false).timeout_global(Some(timeout)).build();
        UreqTransport { agent: ureq::Agent::new_with_config(config) }
    }
}

impl Transport for UreqTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, String> {
        let mut builder = self.agent.post(&request.url);
        for (k, v) in &request.headers {
            builder = builder.header(k.as_str(), v.as_str());
        }
        let mut response = builder.send_json(&request.body).map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

impl Dialect {
    pub fn build(
        self,
        base_url: &str,
        api_key: &str,
        spec: &ModelSpec,
        req: &ChatRequest,
        timeout: Duration,
    ) -> HttpRequest {
        let base = base_url.trim_end_matches('/');
        let messages: Vec<Value> = req.messages.iter().map(|m| json!({"role": m.role, "content": m.content})).collect();
        match self {
            Dialect::OpenaiCompatible => {
                let mut all = Vec::with_capacity(messages.len() + 1);
                all.push(json!({"role": "system", "content": req.system_prompt}));
                all.extend(messages);
                HttpRequest {
                    url: format!("{base}/chat/completions"),
                    headers: vec![
                        ("authorization".into(), format!("Bearer {api_key}")),
                        ("content-type".into(), "application/json".into()),
                    ],
                    body: json!({
                        "model": spec.model_id,
                        "messages": all,
                        "temperature": req.temperature,
                        "max_tokens": req.max_tokens,
                    }),
                    timeout,
                }
            }
            Dialect::AnthropicCompatible => HttpRequest {
                url: format!("{base}/v1/messages"),
                headers: vec![
                    ("x-api-key".into(), api_key.to_string()),
                    ("anthropic-version".into(), ANTHROPIC_VERSION.into()),
                    ("content-type".into(), "application/json".into()),
                ],
                body: json!({
                    "model": spec.model_id,
                    "system": req.system_prompt,
                    "messages": messages,
                    "temperature": req.temperature,
                    "max_tokens": req.max_tokens,
                }),
                timeout,
            },
        }
    }

    pub fn parse(self, body: &str) -> Result<Completion, BackendError> {
        let v: Value = serde_json::from_str(body).map_err(|e| BackendError::Protocol(format!("invalid JSON: {e}")))?;
        let model = v.get("model").and_then(Value::as_str).map(str::to_string);
        let (text, usage) = match self {
            Dialect::OpenaiCompatible => {
                let text = v
                    .pointer("/choices/0/message/content")
                    .and_then(Value::as_str)
                    .ok_or_else(|| BackendError::Protocol("missing choices[0].message.content".into()))?
                    .to_string();
                let usage = v.get("usage").and_then(|u| {
                    Some(Usage {
                        input_tokens: u.get("prompt_tokens")?.as_u64()?,
                        output_tokens: u.get("completion_tokens")?.as_u64()?,
                    })
                });
                (text, usage)
            }
            Dialect::AnthropicCompatible => {
                let blocks = v
                    .get("content")
                    .and_then(Value::as_array)
                    .ok_or_else(|| BackendError::Protocol("missing content array".into()))?;
                let text: String = blocks
                    .iter()
                    .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
                    .filter_map(|b| b.get("text").and_then(Value::as_str))
                    .collect();
                let usage = v.get("usage").and_then(|u| {
                    Some(Usage {
                        input_tokens: u.get("input_tokens")?.as_u64()?,
                        output_tokens: u.get("output_tokens")?.as_u64()?,
                    })
                });
                (text, usage)
            }
        };
        Ok(Completion { text, model, usage, attempts: Vec::new() })
    }
}

pub struct HttpBackend {
    name: String,
    dialect: Dialect,
    base_url: String,
    api_key: String,
    policy: BackendPolicy,
    transport: Arc<dyn Transport>,
    sleeper: Arc<dyn Sleeper>,
    gate: ConcurrencyGate,
    bucket: Option<TokenBucket>,
    audit: Option<Arc<AuditLog>>,
    jitter: Mutex<ChaCha8Rng>,
}

impl HttpBackend {
    pub fn new(
        name: impl Into<String>,
        dialect: Dialect,
        base_url: impl Into<String>,
        api_key: impl Into<String>,
        policy: BackendPolicy,
    ) -> Self {
        let transport = Arc::new(UreqTransport::new(policy.timeout()));
        HttpBackend {
            name: name.into(),
            dialect,
            base_url: base_url.into(),
            api_key: api_key.into(),
            gate: ConcurrencyGate::new(policy.max_concurrent),
            bucket: policy.requests_per_minute.map(TokenBucket::per_minute),
            policy,
            transport,
            sleeper: Arc::new(ThreadSleeper),
            audit: None,
            jitter: Mutex::new(ChaCha8Rng::from_os_rng()),
        }
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_audit(mut self, audit: Arc<AuditLog>) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn with_jitter_seed(self, seed: u64) -> Self {
        *self.jitter.lock().unwrap_or_else(|e| e.into_inner()) = ChaCha8Rng::seed_from_u64(seed);
        self
    }

    fn next_jitter(&self) -> f64 {
        self.jitter.lock().unwrap_or_else(|e| e.into_inner()).random::<f64>()
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, spec: &ModelSpec, request: &ChatRequest) -> Result<Completion, BackendError> {
        let http = self.dialect.build(&self.base_url, &self.api_key, spec, request, self.policy.timeout());
        let mut attempts: Vec<AttemptRecord> = Vec::new();
        let mut retry = 0u32;
        loop {
            if let Some(bucket) = &self.bucket {
                bucket.acquire(self.sleeper.as_ref());
            }
            // the permit is released before any backoff sleep
            let result = {
                let _permit = self.gate.acquire();
                self.transport.post(&http)
            };
            if let Some(audit) = &self.audit {
                let (status, body) = match &result {
                    Ok(r) => (Some(r.status), r.body.as_str()),
                    Err(e) => (None, e.as_str()),
                };
                audit.record(&self.name, &request.tag, &http.url, &http.body, status, body);
            }
            let attempt = attempts.len() as u32 + 1;
            let failure = match result {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    attempts.push(AttemptRecord {
                        attempt,
                        outcome: format!("HTTP {}", resp.status),
                        backoff_ms: None,
                    });
                    let mut completion = self.dialect.parse(&resp.body)?;
                    completion.attempts = attempts;
                    return Ok(completion);
                }
                Ok(resp) if !BackendPolicy::is_retryable_status(resp.status) => {
                    attempts.push(AttemptRecord {
                        attempt,
                        outcome: format!("HTTP {}", resp.status),
                        backoff_ms: None,
                    });
                    return Err(BackendError::Rejected { status: resp.status, body: resp.body, attempts });
                }
                Ok(resp) => format!("HTTP {}", resp.status),
                Err(e) => format!("transport: {e}"),
            };
            if retry >= self.policy.max_retries {
                attempts.push(AttemptRecord { attempt, outcome: failure.clone(), backoff_ms: None });
                return Err(BackendError::Transport { message: failure, attempts });
            }
            let delay = self.policy.backoff(retry, self.next_jitter());
            attempts.push(AttemptRecord { attempt, outcome: failure, backoff_ms: Some(delay.as_millis() as u64) });
            self.sleeper.sleep(delay);
            retry += 1;
        }
    }
}

/// Looks up a credential; a missing variable is a startup configuration error.
pub fn resolve_credential(var: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String, BackendError> {
    match lookup(var) {
        Some(v) if !v.trim().is_empty() => Ok(v),
        _ => Err(BackendError::Config(format!("environment variable `{var}` is not set"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{CallRole, Message, RequestTag};
    use crate::domain::{ProviderKind, SizeClass};
    use std::collections::VecDeque;

    pub(crate) struct FakeTransport {
        pub replies: Mutex<VecDeque<Result<HttpResponse, String>>>,
        pub seen: Mutex<Vec<HttpRequest>>,
    }

    impl FakeTransport {
        fn new(replies: Vec<Result<HttpResponse, String>>) -> Arc<Self> {
            Arc::new(FakeTransport { replies: Mutex::new(replies.into()), seen: Mutex::new(Vec::new()) })
        }
    }

    impl Transport for FakeTransport {
        fn post(&self, request: &HttpRequest) -> Result<HttpResponse, String> {
            self.seen.lock().unwrap().push(request.clone());
            self.replies.lock().unwrap().pop_front().unwrap_or_else(|| Err("script exhausted".into()))
        }
    }

    #[derive(Default)]
    struct CountingSleeper(Mutex<Vec<Duration>>);

    impl Sleeper for CountingSleeper {
        fn sleep(&self, d: Duration) {
            self.0.lock().unwrap().push(d);
        }
    }

    fn ok(body: &str) -> Result<HttpResponse, String> {
        Ok(HttpResponse { status: 200, body: body.into() })
    }

    fn status(code: u16) -> Result<HttpResponse, String> {
        Ok(HttpResponse { status: code, body: "{}".into() })
    }

    fn request() -> ChatRequest {
        ChatRequest {
            system_prompt: "sys".into(),
            messages: vec![Message::user("u1"), Message::assistant("a1"), Message::user("u2")],
            temperature: 0.7,
            max_tokens: 256,
            tag: RequestTag {
                role: CallRole::Debater,
                agent_id: "pro_1".into(),
                turn: 1,
                slot: 1,
                attempt: 0,
                seed: 0,
                scenario_id: "a".into(),
                topic_id: "ubi".into(),
                pairing: "openai".into(),
                proponent_count: 2,
                opponent_count: 1,
            },
        }
    }

    fn spec() -> ModelSpec {
        let mut s = ModelSpec::new(ProviderKind::OpenaiCompatible, "gpt-4o-mini", SizeClass::Large);
        s.endpoint = Some("openai".into());
        s
    }

    const OPENAI_OK: &str = r#"{"model":"gpt-4o-mini-2024-07-18","choices":[{"message":{"role":"assistant","content":"hello"}}],"usage":{"prompt_tokens":12,"completion_tokens":3}}"#;

    fn backend(transport: Arc<FakeTransport>, sleeper: Arc<CountingSleeper>) -> HttpBackend {
        HttpBackend::new(
            "openai",
            Dialect::OpenaiCompatible,
            "https://example.invalid/v1/",
            "k",
            BackendPolicy::default(),
        )
        .with_transport(transport)
        .with_sleeper(sleeper)
        .with_jitter_seed(3)
    }

    #[test]
    fn openai_payload_is_lossless() {
        let t = FakeTransport::new(vec![ok(OPENAI_OK)]);
        let b = backend(t.clone(), Arc::default());
        let c = b.complete(&spec(), &request()).unwrap();
        assert_eq!(c.text, "hello");
        assert_eq!(c.model.as_deref(), Some("gpt-4o-mini-2024-07-18"));
        assert_eq!(c.usage, Some(Usage { input_tokens: 12, output_tokens: 3 }));
        let seen = t.seen.lock().unwrap();
        let body = &seen[0].body;
        assert_eq!(seen[0].url, "https://example.invalid/v1/chat/completions");
        assert!(seen[0].headers.contains(&("authorization".into(), "Bearer k".into())));
        assert_eq!(body["max_tokens"], 256);
        assert_eq!(body["temperature"], 0.7);
        assert_eq!(body["model"], "gpt-4o-mini");
        let roles: Vec<&str> =
            body["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
        assert_eq!(roles, ["system", "user", "assistant", "user"]);
        let contents: Vec<&str> =
            body["messages"].as_array().unwrap().iter().map(|m| m["content"].as_str().unwrap()).collect();
        assert_eq!(contents, ["sys", "u1", "a1", "u2"]);
    }

    #[test]
    fn anthropic_payload_and_parse() {
        let r = Dialect::AnthropicCompatible.build(
            "https://api.example",
            "key",
            &spec(),
            &request(),
            Duration::from_secs(1),
        );
        assert_eq!(r.url, "https://api.example/v1/messages");
        assert!(r.headers.contains(&("anthropic-version".into(), ANTHROPIC_VERSION.into())));
        assert!(r.headers.contains(&("x-api-key".into(), "key".into())));
        assert_eq!(r.body["system"], "sys");
        assert_eq!(r.body["max_tokens"], 256);
        assert_eq!(r.body["messages"].as_array().unwrap().len(), 3);
        let c = Dialect::AnthropicCompatible
            .parse(r#"{"model":"claude-3-haiku","content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}"#)
            .unwrap();
        assert_eq!(c.text, "ab");
        assert_eq!(c.usage, None);
    }

    #[test]
    fn retries_429_then_succeeds() {
        let t = FakeTransport::new(vec![status(429), status(429), ok(OPENAI_OK)]);
        let sleeper = Arc::new(CountingSleeper::default());
        let c = backend(t, sleeper.clone()).complete(&spec(), &request()).unwrap();
        assert_eq!(c.attempts.len(), 3);
        assert_eq!(sleeper.0.lock().unwrap().len(), 2);
        let d = sleeper.0.lock().unwrap().clone();
        assert!(d[0] >= Duration::from_millis(500) && d[0] <= Duration::from_millis(1000));
        assert!(d[1] >= Duration::from_millis(1000) && d[1] <= Duration::from_millis(2000));
    }

    #[test]
    fn client_errors_are_not_retried() {
        let t = FakeTransport::new(vec![status(400), ok(OPENAI_OK)]);
        let sleeper = Arc::new(CountingSleeper::default());
        let err = backend(t, sleeper.clone()).complete(&spec(), &request()).unwrap_err();
        assert!(matches!(err, BackendError::Rejected { status: 400, .. }));
        assert_eq!(err.attempts(), 1);
        assert!(sleeper.0.lock().unwrap().is_empty());
    }

    #[test]
    fn retry_budget_exhausts() {
        let replies = (0..10).map(|i| if i % 2 == 0 { status(503) } else { Err("reset".to_string()) }).collect();
        let t = FakeTransport::new(replies);
        let sleeper = Arc::new(CountingSleeper::default());
        let err = backend(t, sleeper.clone()).complete(&spec(), &request()).unwrap_err();
        match err {
            BackendError::Transport { attempts, .. } => {
                assert_eq!(attempts.len(), 6);
                assert!(attempts[1].outcome.starts_with("transport"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(sleeper.0.lock().unwrap().len(), 5);
    }

    #[test]
    fn missing_credential_is_config_error() {
        let err = resolve_credential("NOPE_KEY", &|_| None).unwrap_err();
        assert!(err.to_string().contains("NOPE_KEY"));
        assert_eq!(resolve_credential("K", &|_| Some("v".into())).unwrap(), "v");
    }
}
