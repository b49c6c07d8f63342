//! Deterministic playback provider for desk-scale runs and tests.
//!
//! Debater lines are keyed `agent_id/turn/slot`. Moderator votes and probe
//! answers are drawn from a hash of the request tag, so output is a pure
//! function of the script and the tag.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendError, CallRole, ChatBackend, ChatRequest, Completion, RequestTag};
use crate::domain::{ModelSpec, Side};
use crate::protocol::VERDICT_MARKER;

fn default_filler() -> String {
    "I maintain my position and have nothing further to add.".to_string()
}

/// Vote rule for the scripted moderator. Unset filters match anything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeratorRule {
    pub scenario: Option<String>,
    pub topic: Option<String>,
    pub pairing: Option<String>,
    /// Probability of choosing a proponent.
    pub p_proponent: Option<f64>,
    /// Probability of choosing the side with more agents (0.5 when counts tie).
    pub p_majority: Option<f64>,
}

impl ModeratorRule {
    fn matches(&self, tag: &RequestTag) -> bool {
        let ok = |f: &Option<String>, v: &str| f.as_deref().is_none_or(|x| x == v);
        ok(&self.scenario, &tag.scenario_id) && ok(&self.topic, &tag.topic_id) && ok(&self.pairing, &tag.pairing)
    }

    fn p_proponent(&self, tag: &RequestTag) -> f64 {
        if let Some(p) = self.p_proponent {
            return p;
        }
        match (self.p_majority, tag.proponent_count.cmp(&tag.opponent_count)) {
            (Some(p), std::cmp::Ordering::Greater) => p,
            (Some(p), std::cmp::Ordering::Less) => 1.0 - p,
            _ => 0.5,
        }
    }
}

/// Answer distribution for the scripted bias probe. Remaining mass answers "No response".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeRule {
    pub topic: Option<String>,
    pub pros: f64,
    pub cons: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default = "default_filler")]
    pub filler: String,
    /// Fallback for unscripted keys; `{agent_id}`, `{turn}`, `{slot}`, `{topic}` are substituted.
    #[serde(default)]
    pub template: Option<String>,
    #[serde(default)]
    pub lines: BTreeMap<String, String>,
    #[serde(default)]
    pub moderator: Vec<ModeratorRule>,
    #[serde(default)]
    pub probe: Vec<ProbeRule>,
}

impl Default for Script {
    fn default() -> Self {
        Script {
            filler: default_filler(),
            template: None,
            lines: BTreeMap::new(),
            moderator: Vec::new(),
            probe: Vec::new(),
        }
    }
}

impl Script {
    pub fn key(agent_id: &str, turn: u32, slot: u32) -> String {
        format!("{agent_id}/{turn}/{slot}")
    }

    pub fn with_template(mut self, template: impl Into<String>) -> Self {
        self.template = Some(template.into());
        self
    }

    pub fn with_line(mut self, agent_id: &str, turn: u32, slot: u32, text: impl Into<String>) -> Self {
        self.lines.insert(Self::key(agent_id, turn, slot), text.into());
        self
    }

    pub fn with_rule(mut self, rule: ModeratorRule) -> Self {
        self.moderator.push(rule);
        self
    }

    pub fn with_probe(mut self, rule: ProbeRule) -> Self {
        self.probe.push(rule);
        self
    }

    fn debater_line(&self, tag: &RequestTag) -> Result<String, BackendError> {
        let key = Self::key(&tag.agent_id, tag.turn, tag.slot);
        if let Some(line) = self.lines.get(&key) {
            return Ok(line.clone());
        }
        if let Some(t) = &self.template {
            return Ok(t
                .replace("{agent_id}", &tag.agent_id)
                .replace("{turn}", &tag.turn.to_string())
                .replace("{slot}", &tag.slot.to_string())
                .replace("{topic}", &tag.topic_id));
        }
        // past the agent's last scripted line: repeat the terminal filler
        let prefix = format!("{}/", tag.agent_id);
        let exhausted = self.lines.keys().filter_map(|k| k.strip_prefix(&prefix)).any(|rest| {
            let mut it = rest.split('/').filter_map(|x| x.parse::<u32>().ok());
            matches!((it.next(), it.next()), (Some(t), Some(s)) if (t, s) < (tag.turn, tag.slot))
        });
        if exhausted {
            Ok(self.filler.clone())
        } else {
            Err(BackendError::Scripting(format!("no scripted line for key `{key}`")))
        }
    }

    fn moderator_reply(&self, tag: &RequestTag) -> String {
        let p = self.moderator.iter().find(|r| r.matches(tag)).map_or(0.5, |r| r.p_proponent(tag));
        let side = if unit(tag.seed, &[tag.turn as u64, 1]) < p { Side::Proponent } else { Side::Opponent };
        let count = match side {
            Side::Proponent => tag.proponent_count,
            Side::Opponent => tag.opponent_count,
        }
        .max(1);
        let k = mix(tag.seed, &[tag.turn as u64, 2]) % count as u64 + 1;
        format!(
            "Turn {} summary: each side restated and defended its position.\n{VERDICT_MARKER} {}_{k}",
            tag.turn,
            side.id_prefix()
        )
    }

    fn probe_reply(&self, tag: &RequestTag) -> String {
        let rule = self.probe.iter().find(|r| r.topic.as_deref().is_none_or(|t| t == tag.topic_id));
        let (pros, cons) = rule.map_or((0.0, 0.0), |r| (r.pros, r.cons));
        let u = unit(tag.seed, &[tag.slot as u64, 3]);
        let answer = if u < pros {
            "Pros"
        } else if u < pros + cons {
            "Cons"
        } else {
            "No response"
        };
        format!("ANSWER: {answer}")
    }
}

/// splitmix64 finalizer folded over the inputs.
fn mix(seed: u64, parts: &[u64]) -> u64 {
    let step = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    parts.iter().fold(step(seed), |acc, &p| step(acc ^ step(p)))
}

fn unit(seed: u64, parts: &[u64]) -> f64 {
    (mix(seed, parts) >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    script: Script,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        ScriptedBackend { script }
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("cannot read script {}: {e}", path.display())))?;
        let script: Script = toml::from_str(&text)
            .map_err(|e| BackendError::Config(format!("invalid script {}: {e}", path.display())))?;
        Ok(ScriptedBackend { script })
    }

    pub fn script(&self) -> &Script {
        &self.script
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, _spec: &ModelSpec, request: &ChatRequest) -> Result<Completion, BackendError> {
        let tag = &request.tag;
        let text = match tag.role {
            CallRole::Debater => self.script.debater_line(tag)?,
            CallRole::Moderator => self.script.moderator_reply(tag),
            CallRole::Probe => self.script.probe_reply(tag),
        };
        Ok(Completion::scripted(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(role: CallRole, agent: &str, turn: u32, slot: u32, seed: u64) -> RequestTag {
        RequestTag {
            role,
            agent_id: agent.into(),
            turn,
            slot,
            attempt: 0,
            seed,
            scenario_id: "a".into(),
            topic_id: "ubi".into(),
            pairing: "p".into(),
            proponent_count: 2,
            opponent_count: 1,
        }
    }

    fn req(tag: RequestTag) -> ChatRequest {
        ChatRequest { system_prompt: String::new(), messages: Vec::new(), temperature: 0.7, max_tokens: 256, tag }
    }

    fn spec() -> ModelSpec {
        ModelSpec::scripted("s", crate::domain::SizeClass::Large, "x")
    }

    #[test]
    fn plays_keyed_line() {
        let b = ScriptedBackend::new(Script::default().with_line("pro_1", 1, 1, "UBI reduces inequality..."));
        let c = b.complete(&spec(), &req(tag(CallRole::Debater, "pro_1", 1, 1, 0))).unwrap();
        assert_eq!(c.text, "UBI reduces inequality...");
    }

    #[test]
    fn filler_after_last_line_and_error_before() {
        let b = ScriptedBackend::new(Script::default().with_line("pro_1", 1, 1, "x"));
        let c = b.complete(&spec(), &req(tag(CallRole::Debater, "pro_1", 3, 2, 0))).unwrap();
        assert_eq!(c.text, default_filler());
        let err = b.complete(&spec(), &req(tag(CallRole::Debater, "opp_1", 1, 1, 0))).unwrap_err();
        assert!(err.to_string().contains("opp_1/1/1"));
    }

    #[test]
    fn moderator_is_pure_in_tag() {
        let b = ScriptedBackend::new(Script::default());
        let t = tag(CallRole::Moderator, "moderator", 2, 0, 99);
        let a = b.complete(&spec(), &req(t.clone())).unwrap().text;
        let again = b.complete(&spec(), &req(t)).unwrap().text;
        assert_eq!(a, again);
        assert!(a.contains(VERDICT_MARKER));
    }

    #[test]
    fn majority_rule_frequency() {
        let b = ScriptedBackend::new(
            Script::default().with_rule(ModeratorRule { p_majority: Some(0.7), ..Default::default() }),
        );
        let n = 20_000;
        let pro = (0..n)
            .filter(|&s| {
                let text = b.complete(&spec(), &req(tag(CallRole::Moderator, "m", 1, 0, s))).unwrap().text;
                text.contains("pro_")
            })
            .count();
        let rate = pro as f64 / n as f64;
        assert!((rate - 0.7).abs() < 0.015, "{rate}");
    }

    #[test]
    fn probe_always_pros() {
        let b = ScriptedBackend::new(Script::default().with_probe(ProbeRule { topic: None, pros: 1.0, cons: 0.0 }));
        let c = b.complete(&spec(), &req(tag(CallRole::Probe, "neutral", 0, 5, 1))).unwrap();
        assert_eq!(c.text, "ANSWER: Pros");
    }

    #[test]
    fn script_parses_from_toml() {
        let s: Script = toml::from_str(
            r#"
            template = "{agent_id} speaks"
            [lines]
            "opp_1/2/1" = "Complete agreement."
            [[moderator]]
            scenario = "a"
            p_proponent = 0.9
            [[probe]]
            topic = "ubi"
            pros = 0.65
            cons = 0.01
            "#,
        )
        .unwrap();
        assert_eq!(s.lines.len(), 1);
        assert_eq!(s.moderator[0].p_proponent, Some(0.9));
        assert_eq!(s.probe[0].pros, 0.65);
    }
}
