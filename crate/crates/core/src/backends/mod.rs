//! Completion providers: live HTTP dialects and a deterministic scripted player.

mod audit;
mod http;
mod policy;
mod scripted;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ModelSpec, ProviderKind};

pub use audit::AuditLog;
pub use http::{resolve_credential, Dialect, HttpBackend, HttpRequest, HttpResponse, Transport, UreqTransport};
pub use policy::{BackendPolicy, ConcurrencyGate, Sleeper, ThreadSleeper, TokenBucket};
pub use scripted::{ModeratorRule, ProbeRule, Script, ScriptedBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallRole {
    Debater,
    Moderator,
    Probe,
}

/// Where a request sits in an experiment. Live providers ignore it; the
/// scripted provider keys its playback on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTag {
    pub role: CallRole,
    pub agent_id: String,
    pub turn: u32,
    /// 1-based slot within the speaker's side for the turn (trial index for probes).
    pub slot: u32,
    /// 0 for the first ask, incremented on each re-ask.
    pub attempt: u32,
    pub seed: u64,
    pub scenario_id: String,
    pub topic_id: String,
    pub pairing: String,
    pub proponent_count: u32,
    pub opponent_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub tag: RequestTag,
}

/// Merges consecutive same-role messages and drops empty ones, so roles alternate.
pub fn normalize_messages(messages: Vec<Message>) -> Vec<Message> {
    let mut out: Vec<Message> = Vec::with_capacity(messages.len());
    for m in messages {
        if m.content.trim().is_empty() {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.role == m.role => {
                last.content.push_str("\n\n");
                last.content.push_str(&m.content);
            }
            _ => out.push(m),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl Usage {
    pub fn add(&mut self, other: Usage) {
        self.input_tokens += other.input_tokens;
        self.output_tokens += other.output_tokens;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub outcome: String,
    /// Backoff slept after this attempt, if any.
    pub backoff_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    /// Model name as reported by the provider.
    pub model: Option<String>,
    /// Provider-reported token counts; never estimated.
    pub usage: Option<Usage>,
    pub attempts: Vec<AttemptRecord>,
}

impl Completion {
    pub fn scripted(text: impl Into<String>) -> Self {
        Completion { text: text.into(), model: None, usage: None, attempts: Vec::new() }
    }
}

#[derive(Debug, Clone, Error)]
pub enum BackendError {
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("transport failure after {} attempts: {message}", attempts.len())]
    Transport { message: String, attempts: Vec<AttemptRecord> },
    #[error("request rejected with HTTP {status}: {body}")]
    Rejected { status: u16, body: String, attempts: Vec<AttemptRecord> },
    #[error("malformed provider response: {0}")]
    Protocol(String),
    #[error("scripting error: {0}")]
    Scripting(String),
}

impl BackendError {
    pub fn attempts(&self) -> usize {
        match self {
            BackendError::Transport { attempts, .. } | BackendError::Rejected { attempts, .. } => attempts.len(),
            _ => 1,
        }
    }

    /// Per-attempt outcomes, when the backend recorded them.
    pub fn attempt_log(&self) -> &[AttemptRecord] {
        match self {
            BackendError::Transport { attempts, .. } | BackendError::Rejected { attempts, .. } => attempts,
            _ => &[],
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, spec: &ModelSpec, request: &ChatRequest) -> Result<Completion, BackendError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    fn complete(&self, spec: &ModelSpec, request: &ChatRequest) -> Result<Completion, BackendError> {
        (**self).complete(spec, request)
    }
}

/// Dispatches each model spec to the backend named by its endpoint or script.
#[derive(Default)]
pub struct BackendRouter {
    endpoints: HashMap<String, Arc<dyn ChatBackend>>,
    scripts: HashMap<String, Arc<dyn ChatBackend>>,
}

impl BackendRouter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_endpoint(mut self, name: impl Into<String>, backend: Arc<dyn ChatBackend>) -> Self {
        self.endpoints.insert(name.into(), backend);
        self
    }

    pub fn with_script(mut self, path: impl Into<String>, backend: Arc<dyn ChatBackend>) -> Self {
        self.scripts.insert(path.into(), backend);
        self
    }

    fn route(&self, spec: &ModelSpec) -> Result<&Arc<dyn ChatBackend>, BackendError> {
        let (table, key, kind) = match spec.provider {
            ProviderKind::Scripted => (&self.scripts, spec.script.as_deref(), "script"),
            _ => (&self.endpoints, spec.endpoint.as_deref(), "endpoint"),
        };
        let key = key.ok_or_else(|| BackendError::Config(format!("model `{}` names no {kind}", spec.model_id)))?;
        table.get(key).ok_or_else(|| BackendError::Config(format!("no backend registered for {kind} `{key}`")))
    }
}

impl ChatBackend for BackendRouter {
    fn complete(&self, spec: &ModelSpec, request: &ChatRequest) -> Result<Completion, BackendError> {
        self.route(spec)?.complete(spec, request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_merges_and_drops() {
        let msgs = vec![
            Message::user("a"),
            Message::user("b"),
            Message::assistant("  "),
            Message::assistant("c"),
            Message::user("d"),
        ];
        let n = normalize_messages(msgs);
        assert_eq!(n, vec![Message::user("a\n\nb"), Message::assistant("c"), Message::user("d")]);
    }
}
