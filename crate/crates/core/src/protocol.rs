//! The debate state machine: speaking schedule, concession detection,
//! verdict parsing and the turn loop.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{
    normalize_messages, AttemptRecord, CallRole, ChatBackend, ChatRequest, Message, RequestTag, Usage,
};
use crate::domain::{
    Agent, DebateConfig, DebateTranscript, EarlyTermination, Outcome, Side, TurnRecord, Utterance, Verdict,
};
use crate::prompts;

pub const VERDICT_MARKER: &str = "MOST_PERSUASIVE:";
pub const AGREEMENT_PHRASE: &str = "complete agreement";
pub const MAX_REASKS: u32 = 2;
pub const MODERATOR_ID: &str = "moderator";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub agent_id: String,
    pub side: Side,
    /// 1-based position among this side's slots in the turn.
    pub side_slot: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakingSchedule {
    pub first_side: Side,
    pub turns: Vec<Vec<Slot>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("{0} side has no agents")]
    EmptySide(Side),
}

/// Alternating sides, round-robin within each side. The rotation carries
/// over between turns so every agent of a large side gets to speak.
pub fn randomize_speaking_order(
    proponents: &[String],
    opponents: &[String],
    seed: u64,
    turns: u32,
    slots_per_side: u32,
) -> Result<SpeakingSchedule, ScheduleError> {
    if proponents.is_empty() {
        return Err(ScheduleError::EmptySide(Side::Proponent));
    }
    if opponents.is_empty() {
        return Err(ScheduleError::EmptySide(Side::Opponent));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first_side = if rng.random_bool(0.5) { Side::Proponent } else { Side::Opponent };
    let mut cursor = [0usize, 0usize];
    let mut all = Vec::with_capacity(turns as usize);
    for _ in 0..turns {
        let mut turn = Vec::with_capacity(2 * slots_per_side as usize);
        for k in 0..slots_per_side {
            for side in [first_side, first_side.other()] {
                let (agents, c) = match side {
                    Side::Proponent => (proponents, &mut cursor[0]),
                    Side::Opponent => (opponents, &mut cursor[1]),
                };
                turn.push(Slot { agent_id: agents[*c % agents.len()].clone(), side, side_slot: k + 1 });
                *c += 1;
            }
        }
        all.push(turn);
    }
    Ok(SpeakingSchedule { first_side, turns: all })
}

/// True when the message is, or opens its first sentence with, the concession phrase.
pub fn detect_complete_agreement(text: &str) -> bool {
    let cleaned: String = text
        .chars()
        .filter(|c| !matches!(c, '*' | '"' | '`' | '\u{201c}' | '\u{201d}'))
        .collect::<String>()
        .to_lowercase();
    let trimmed = cleaned
        .trim()
        .trim_matches(|c: char| c == '\'' || c == '\u{2018}' || c == '\u{2019}')
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .trim();
    if trimmed == AGREEMENT_PHRASE {
        return true;
    }
    let first = trimmed.split(['.', '!', '?', '\n']).next().unwrap_or("").trim();
    first.starts_with(AGREEMENT_PHRASE)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerdictParseError {
    #[error("empty roster")]
    EmptyRoster,
    #[error("no debater id found in moderator reply")]
    NotFound,
    #[error("ambiguous moderator reply names {0:?}")]
    Ambiguous(Vec<String>),
}

fn id_regex(roster: &[(String, Side)]) -> Regex {
    let alternatives: Vec<String> = roster.iter().map(|(id, _)| regex::escape(id)).collect();
    Regex::new(&format!(r"(?i)\b({})\b", alternatives.join("|"))).expect("roster ids form a valid regex")
}

/// Reads the trailing marker line; falls back to a unique id in the final paragraph.
pub fn parse_moderator_verdict(text: &str, roster: &[(String, Side)]) -> Result<Verdict, VerdictParseError> {
    if roster.is_empty() {
        return Err(VerdictParseError::EmptyRoster);
    }
    let ids = id_regex(roster);
    let lookup = |found: &str| roster.iter().find(|(id, _)| id.eq_ignore_ascii_case(found)).cloned();
    let verdict = |(id, side): (String, Side)| Verdict {
        selected_agent_id: id,
        selected_side: side,
        rationale: text.to_string(),
    };

    let marker = VERDICT_MARKER.trim_end_matches(':').to_ascii_lowercase();
    for line in text.lines().rev() {
        let lower = line.to_ascii_lowercase();
        if let Some(pos) = lower.find(&marker) {
            let rest = &line[pos + marker.len()..];
            if let Some(m) = ids.find(rest) {
                if let Some(hit) = lookup(m.as_str()) {
                    return Ok(verdict(hit));
                }
            }
            break;
        }
    }

    let paragraph = text.split("\n\n").map(str::trim).filter(|p| !p.is_empty()).last().unwrap_or("");
    let found: BTreeSet<String> =
        ids.find_iter(paragraph).filter_map(|m| lookup(m.as_str()).map(|(id, _)| id)).collect();
    match found.len() {
        0 => Err(VerdictParseError::NotFound),
        1 => {
            let id = found.into_iter().next().unwrap();
            Ok(verdict(lookup(&id).unwrap()))
        }
        _ => Err(VerdictParseError::Ambiguous(found.into_iter().collect())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    Config,
    Debater,
    Moderator,
}

/// A debate that could not be completed. No partial transcript is kept.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("debate failed at turn {turn} ({stage:?}): {error}")]
pub struct DebateFailure {
    pub turn: u32,
    pub stage: FailureStage,
    pub error: String,
    pub attempts: usize,
    #[serde(default)]
    pub attempt_log: Vec<AttemptRecord>,
}

/// A transcript plus provider metadata that is not part of the replayable record.
#[derive(Debug, Clone, PartialEq)]
pub struct DebateRun {
    pub transcript: DebateTranscript,
    /// Model names as reported by providers, keyed by agent id.
    pub reported_models: BTreeMap<String, String>,
    pub usage: Option<Usage>,
}

struct Context<'a> {
    config: &'a DebateConfig,
    backend: &'a dyn ChatBackend,
    roster: Vec<Agent>,
    statement: String,
    reported: BTreeMap<String, String>,
    usage: Option<Usage>,
}

impl Context<'_> {
    fn tag(&self, role: CallRole, agent_id: &str, turn: u32, slot: u32, attempt: u32) -> RequestTag {
        RequestTag {
            role,
            agent_id: agent_id.to_string(),
            turn,
            slot,
            attempt,
            seed: self.config.seed,
            scenario_id: self.config.scenario.id.clone(),
            topic_id: self.config.topic.id.clone(),
            pairing: self.config.pairing.id.clone(),
            proponent_count: self.config.scenario.proponent_count,
            opponent_count: self.config.scenario.opponent_count,
        }
    }

    fn note(&mut self, agent_id: &str, completion: &crate::backends::Completion) {
        if let Some(m) = &completion.model {
            self.reported.insert(agent_id.to_string(), m.clone());
        }
        if let Some(u) = completion.usage {
            self.usage.get_or_insert_with(Usage::default).add(u);
        }
    }

    fn debater_messages(agent_id: &str, history: &[Utterance]) -> Vec<Message> {
        let mut msgs: Vec<Message> = history
            .iter()
            .map(|u| {
                if u.agent_id == agent_id {
                    Message::assistant(u.text.clone())
                } else {
                    Message::user(format!("[{}]: {}", u.agent_id, u.text))
                }
            })
            .collect();
        if msgs.first().is_none_or(|m| m.role == crate::backends::Role::Assistant) {
            msgs.insert(0, Message::user(prompts::NO_HISTORY));
        }
        normalize_messages(msgs)
    }

    fn moderator_view(&self, turns: &[(u32, &[Utterance])], current: u32) -> String {
        let mut out = format!("Debate topic: {}\nDebaters: ", self.statement);
        let names: Vec<String> = self.roster.iter().map(|a| format!("{} ({})", a.id, a.side)).collect();
        out.push_str(&names.join(", "));
        for (index, utterances) in turns {
            out.push_str(&format!("\n\nTurn {index}"));
            for u in *utterances {
                out.push_str(&format!("\n[{}]: {}", u.agent_id, u.text));
            }
        }
        out.push_str(&format!("\n\nTurn {current} has ended."));
        out
    }
}

/// Runs one debate to completion or failure.
pub fn run_debate(config: &DebateConfig, backend: &dyn ChatBackend) -> Result<DebateRun, DebateFailure> {
    let fail =
        |turn, stage, error: String, attempts| DebateFailure { turn, stage, error, attempts, attempt_log: Vec::new() };
    let statement = config
        .topic_statement()
        .ok_or_else(|| {
            fail(0, FailureStage::Config, format!("topic `{}` has no statement for this framing", config.topic.id), 0)
        })?
        .to_string();
    let roster = config.roster();
    let ids = |side: Side| roster.iter().filter(|a| a.side == side).map(|a| a.id.clone()).collect::<Vec<_>>();
    let schedule = randomize_speaking_order(
        &ids(Side::Proponent),
        &ids(Side::Opponent),
        config.seed,
        config.max_turns,
        config.slots_per_side_per_turn,
    )
    .map_err(|e| fail(0, FailureStage::Config, e.to_string(), 0))?;
    let verdict_roster: Vec<(String, Side)> = roster.iter().map(|a| (a.id.clone(), a.side)).collect();

    let mut ctx = Context { config, backend, roster, statement, reported: BTreeMap::new(), usage: None };
    let mut history: Vec<Utterance> = Vec::new();
    let mut turn_bounds: Vec<(u32, usize, usize)> = Vec::new();
    let mut turns: Vec<TurnRecord> = Vec::new();
    let mut early: Option<EarlyTermination> = None;

    for (t, slots) in schedule.turns.iter().enumerate() {
        let turn_index = t as u32 + 1;
        let start = history.len();
        for slot in slots {
            let agent = ctx.roster.iter().find(|a| a.id == slot.agent_id).expect("schedule uses roster ids").clone();
            let request = ChatRequest {
                system_prompt: prompts::debater_prompt(agent.side, &ctx.statement),
                messages: Context::debater_messages(&agent.id, &history),
                temperature: agent.model.temperature,
                max_tokens: agent.model.max_tokens,
                tag: ctx.tag(CallRole::Debater, &agent.id, turn_index, slot.side_slot, 0),
            };
            let completion = ctx.backend.complete(&agent.model, &request).map_err(|e| DebateFailure {
                attempt_log: e.attempt_log().to_vec(),
                ..fail(turn_index, FailureStage::Debater, format!("{}: {e}", agent.id), e.attempts())
            })?;
            ctx.note(&agent.id, &completion);
            let concedes = detect_complete_agreement(&completion.text);
            history.push(Utterance {
                agent_id: agent.id.clone(),
                side: agent.side,
                model_id: agent.model.model_id.clone(),
                text: completion.text,
            });
            if concedes {
                early = Some(EarlyTermination { turn_index, conceding_agent_id: agent.id.clone() });
                break;
            }
        }
        turn_bounds.push((turn_index, start, history.len()));

        let view: Vec<(u32, &[Utterance])> = turn_bounds.iter().map(|&(i, a, b)| (i, &history[a..b])).collect();
        let mut messages = vec![Message::user(ctx.moderator_view(&view, turn_index))];
        let system_prompt = prompts::moderator_prompt(&ctx.roster);
        let mut last_error = String::new();
        let mut verdict = None;
        for attempt in 0..=MAX_REASKS {
            let request = ChatRequest {
                system_prompt: system_prompt.clone(),
                messages: messages.clone(),
                temperature: config.neutral_model.temperature,
                max_tokens: config.neutral_model.max_tokens,
                tag: ctx.tag(CallRole::Moderator, MODERATOR_ID, turn_index, 0, attempt),
            };
            let completion = ctx.backend.complete(&config.neutral_model, &request).map_err(|e| DebateFailure {
                attempt_log: e.attempt_log().to_vec(),
                ..fail(turn_index, FailureStage::Moderator, e.to_string(), e.attempts())
            })?;
            ctx.note(MODERATOR_ID, &completion);
            match parse_moderator_verdict(&completion.text, &verdict_roster) {
                Ok(v) => {
                    verdict = Some(v);
                    break;
                }
                Err(e) => {
                    last_error = e.to_string();
                    messages.push(Message::assistant(completion.text));
                    messages.push(Message::user(prompts::moderator_reask(&ctx.roster)));
                }
            }
        }
        let verdict = verdict.ok_or_else(|| {
            fail(
                turn_index,
                FailureStage::Moderator,
                format!("unparseable verdict after {MAX_REASKS} re-asks: {last_error}"),
                (MAX_REASKS + 1) as usize,
            )
        })?;
        turns.push(TurnRecord { index: turn_index, utterances: history[start..].to_vec(), verdict });
        if early.is_some() {
            break;
        }
    }

    let outcome = Outcome::recount(&turns);
    Ok(DebateRun {
        transcript: DebateTranscript { config: config.clone(), turns, early_termination: early, outcome },
        reported_models: ctx.reported,
        usage: ctx.usage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("{prefix}_{k}")).collect()
    }

    #[test]
    fn schedule_alternates_and_rotates() {
        let s = randomize_speaking_order(&ids("pro", 2), &ids("opp", 1), 5, 3, 3).unwrap();
        assert_eq!(s.turns.len(), 3);
        for turn in &s.turns {
            assert_eq!(turn.len(), 6);
            for w in turn.windows(2) {
                assert_ne!(w[0].side, w[1].side);
            }
            assert_eq!(turn[0].side, s.first_side);
        }
        let pro: Vec<&str> =
            s.turns[0].iter().filter(|x| x.side == Side::Proponent).map(|x| x.agent_id.as_str()).collect();
        assert_eq!(pro, ["pro_1", "pro_2", "pro_1"]);
        assert!(s.turns.iter().flatten().filter(|x| x.side == Side::Opponent).all(|x| x.agent_id == "opp_1"));
        assert_eq!(s, randomize_speaking_order(&ids("pro", 2), &ids("opp", 1), 5, 3, 3).unwrap());
    }

    #[test]
    fn schedule_rejects_empty_side() {
        assert_eq!(
            randomize_speaking_order(&[], &ids("opp", 1), 0, 3, 3),
            Err(ScheduleError::EmptySide(Side::Proponent))
        );
    }

    #[test]
    fn first_side_is_fair() {
        let n = 10_000;
        let pro = (0..n)
            .filter(|&s| {
                randomize_speaking_order(&ids("pro", 1), &ids("opp", 1), s, 1, 1).unwrap().first_side == Side::Proponent
            })
            .count();
        let f = pro as f64 / n as f64;
        assert!((0.48..=0.52).contains(&f), "{f}");
    }

    #[test]
    fn agreement_detection() {
        assert!(detect_complete_agreement("Complete agreement."));
        assert!(detect_complete_agreement("  COMPLETE AGREEMENT "));
        assert!(detect_complete_agreement("**Complete agreement.**"));
        assert!(detect_complete_agreement("\"Complete agreement\""));
        assert!(detect_complete_agreement("Complete agreement. You have convinced me."));
        assert!(!detect_complete_agreement("I completely agree that taxes distort incentives, however..."));
        assert!(!detect_complete_agreement("We are far from complete agreement."));
        assert!(!detect_complete_agreement(""));
    }

    fn roster() -> Vec<(String, Side)> {
        vec![("pro_1".into(), Side::Proponent), ("opp_1".into(), Side::Opponent), ("opp_2".into(), Side::Opponent)]
    }

    #[test]
    fn verdict_marker() {
        let v = parse_moderator_verdict("...summary...\nMOST_PERSUASIVE: pro_1", &roster()).unwrap();
        assert_eq!((v.selected_agent_id.as_str(), v.selected_side), ("pro_1", Side::Proponent));
        let v = parse_moderator_verdict("opp_1 said things.\n**MOST_PERSUASIVE:** `opp_2`.", &roster()).unwrap();
        assert_eq!(v.selected_agent_id, "opp_2");
        assert!(v.rationale.starts_with("opp_1 said"));
    }

    #[test]
    fn verdict_fallback_and_ambiguity() {
        let text = "pro_1 and opp_1 argued.\n\nOverall I side with opp_2, whose data was strongest.";
        let v = parse_moderator_verdict(text, &roster()).unwrap();
        assert_eq!((v.selected_agent_id.as_str(), v.selected_side), ("opp_2", Side::Opponent));
        assert_eq!(
            parse_moderator_verdict("Both pro_1 and opp_1 were good.", &roster()),
            Err(VerdictParseError::Ambiguous(vec!["opp_1".into(), "pro_1".into()]))
        );
        assert_eq!(parse_moderator_verdict("No names.", &roster()), Err(VerdictParseError::NotFound));
        assert_eq!(parse_moderator_verdict("x", &[]), Err(VerdictParseError::EmptyRoster));
    }

    #[test]
    fn id_boundaries() {
        let r: Vec<(String, Side)> = vec![("pro_1".into(), Side::Proponent), ("pro_10".into(), Side::Proponent)];
        let v = parse_moderator_verdict("I pick pro_10", &r).unwrap();
        assert_eq!(v.selected_agent_id, "pro_10");
    }
}
