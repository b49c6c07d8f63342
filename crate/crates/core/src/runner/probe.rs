//! Prior-bias probe of the neutral model on a topic's two statements.

use serde::{Deserialize, Serialize};

use crate::backends::{CallRole, ChatBackend, ChatRequest, Message, RequestTag};
use crate::domain::{ModelSpec, Topic};
use crate::error::{CoreError, Result};
use crate::prompts::{probe_prompt, probe_reask, PROBE_MARKER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeAnswer {
    Pros,
    Cons,
    NoResponse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasProbeResult {
    pub topic_id: String,
    pub model_id: String,
    pub trials: u32,
    pub pros: u32,
    pub cons: u32,
    pub no_response: u32,
    /// Replies that named no answer even after a re-ask.
    pub unclassified: u32,
}

impl BiasProbeResult {
    fn fraction(&self, k: u32) -> f64 {
        k as f64 / self.trials as f64
    }

    pub fn pros_fraction(&self) -> f64 {
        self.fraction(self.pros)
    }

    pub fn cons_fraction(&self) -> f64 {
        self.fraction(self.cons)
    }

    pub fn no_response_fraction(&self) -> f64 {
        self.fraction(self.no_response)
    }
}

fn answer_from(s: &str) -> Option<ProbeAnswer> {
    let cleaned: String =
        s.trim().trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace()).to_ascii_lowercase();
    match cleaned.as_str() {
        "pros" | "pro" => Some(ProbeAnswer::Pros),
        "cons" | "con" => Some(ProbeAnswer::Cons),
        "no response" => Some(ProbeAnswer::NoResponse),
        _ => None,
    }
}

/// Reads the last `ANSWER:` line, or accepts a reply that is nothing but an answer.
pub fn classify_probe_reply(text: &str) -> Option<ProbeAnswer> {
    let marked = text.lines().rev().find_map(|line| {
        let i = line.find(PROBE_MARKER)?;
        Some(&line[i + PROBE_MARKER.len()..])
    });
    match marked {
        Some(rest) => answer_from(rest),
        None => answer_from(text),
    }
}

/// Runs `n` independent probes of `neutral` on `topic`.
pub fn bias_probe(
    topic: &Topic,
    neutral: &ModelSpec,
    n: u32,
    seed: u64,
    backend: &dyn ChatBackend,
) -> Result<BiasProbeResult> {
    if n == 0 {
        return Err(CoreError::Probe("trial count must be positive".into()));
    }
    let cons = topic
        .reframed_opponent_statement
        .as_deref()
        .ok_or_else(|| CoreError::Probe(format!("topic '{}' has no reframed statement to probe against", topic.id)))?;
    let prompt = probe_prompt(&topic.proponent_statement, cons);
    let mut result = BiasProbeResult {
        topic_id: topic.id.clone(),
        model_id: neutral.model_id.clone(),
        trials: n,
        pros: 0,
        cons: 0,
        no_response: 0,
        unclassified: 0,
    };
    for trial in 0..n {
        let mut messages = vec![Message::user(prompt.clone())];
        let mut answer = None;
        for attempt in 0..2 {
            let request = ChatRequest {
                system_prompt: String::new(),
                messages: messages.clone(),
                temperature: neutral.temperature,
                max_tokens: neutral.max_tokens,
                tag: RequestTag {
                    role: CallRole::Probe,
                    agent_id: "neutral".into(),
                    turn: 0,
                    slot: trial,
                    attempt,
                    seed,
                    scenario_id: String::new(),
                    topic_id: topic.id.clone(),
                    pairing: String::new(),
                    proponent_count: 0,
                    opponent_count: 0,
                },
            };
            let reply = backend.complete(neutral, &request)?;
            answer = classify_probe_reply(&reply.text);
            if answer.is_some() {
                break;
            }
            messages.push(Message::assistant(reply.text));
            messages.push(Message::user(probe_reask()));
        }
        match answer {
            Some(ProbeAnswer::Pros) => result.pros += 1,
            Some(ProbeAnswer::Cons) => result.cons += 1,
            Some(ProbeAnswer::NoResponse) => result.no_response += 1,
            None => result.unclassified += 1,
        }
    }
    Ok(result)
}
