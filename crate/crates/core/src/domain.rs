//! Shared vocabulary: topics, scenarios, model specs, debate configs and transcripts.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    pub title: String,
    pub proponent_statement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reframed_opponent_statement: Option<String>,
    #[serde(default)]
    pub category: String,
}

impl Topic {
    /// Statement substituted for `{topic}` under the given framing.
    pub fn statement(&self, framing: Framing) -> Option<&str> {
        match framing {
            Framing::Original => Some(&self.proponent_statement),
            Framing::Reversed => self.reframed_opponent_statement.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeClass {
    Large,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    OpenaiCompatible,
    AnthropicCompatible,
    Scripted,
}

pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEBATER_MAX_TOKENS: u32 = 256;
pub const MODERATOR_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub provider: ProviderKind,
    pub model_id: String,
    pub size_class: SizeClass,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Named endpoint from the configuration (live providers).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Script file for the scripted provider.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
}

impl ModelSpec {
    pub fn new(provider: ProviderKind, model_id: impl Into<String>, size_class: SizeClass) -> Self {
        ModelSpec {
            provider,
            model_id: model_id.into(),
            size_class,
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEBATER_MAX_TOKENS,
            endpoint: None,
            script: None,
        }
    }

    pub fn scripted(model_id: impl Into<String>, size_class: SizeClass, script: impl Into<String>) -> Self {
        let mut spec = ModelSpec::new(ProviderKind::Scripted, model_id, size_class);
        spec.script = Some(script.into());
        spec
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    fn check(&self, path: &str, issues: &mut Vec<ValidationIssue>) {
        if !(0.0..=2.0).contains(&self.temperature) {
            issues.push(ValidationIssue::new(format!("{path}.temperature"), "temperature must be in [0, 2]"));
        }
        if self.max_tokens == 0 {
            issues.push(ValidationIssue::new(format!("{path}.max_tokens"), "max_tokens must be positive"));
        }
        if self.model_id.trim().is_empty() {
            issues.push(ValidationIssue::new(format!("{path}.model_id"), "model_id must be non-empty"));
        }
        match self.provider {
            ProviderKind::Scripted if self.script.is_none() => issues
                .push(ValidationIssue::new(format!("{path}.script"), "scripted model requires a script reference")),
            ProviderKind::OpenaiCompatible | ProviderKind::AnthropicCompatible if self.endpoint.is_none() => {
                issues.push(ValidationIssue::new(format!("{path}.endpoint"), "live model requires an endpoint"))
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Proponent,
    Opponent,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Proponent => Side::Opponent,
            Side::Opponent => Side::Proponent,
        }
    }

    pub fn id_prefix(self) -> &'static str {
        match self {
            Side::Proponent => "pro",
            Side::Opponent => "opp",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Proponent => "Proponent",
            Side::Opponent => "Opponent",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Intelligence {
    Superior,
    Equivalent,
    Inferior,
}

impl Intelligence {
    pub fn as_str(self) -> &'static str {
        match self {
            Intelligence::Superior => "Superior",
            Intelligence::Equivalent => "Equivalent",
            Intelligence::Inferior => "Inferior",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectedConformity {
    Proponent,
    Opponent,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub proponent_count: u32,
    pub proponent_size: SizeClass,
    pub opponent_count: u32,
    pub opponent_size: SizeClass,
    pub expected_conformity: ExpectedConformity,
    #[serde(default)]
    pub related_hypotheses: Vec<Hypothesis>,
}

impl Scenario {
    pub fn majority_ratio(&self) -> f64 {
        self.proponent_count as f64 / self.opponent_count as f64
    }

    pub fn intelligence(&self) -> Intelligence {
        match (self.proponent_size, self.opponent_size) {
            (SizeClass::Large, SizeClass::Small) => Intelligence::Superior,
            (SizeClass::Small, SizeClass::Large) => Intelligence::Inferior,
            _ => Intelligence::Equivalent,
        }
    }

    /// Side with more agents, if any.
    pub fn majority_side(&self) -> Option<Side> {
        match self.proponent_count.cmp(&self.opponent_count) {
            std::cmp::Ordering::Greater => Some(Side::Proponent),
            std::cmp::Ordering::Less => Some(Side::Opponent),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn count(&self, side: Side) -> u32 {
        match side {
            Side::Proponent => self.proponent_count,
            Side::Opponent => self.opponent_count,
        }
    }

    pub fn size(&self, side: Side) -> SizeClass {
        match side {
            Side::Proponent => self.proponent_size,
            Side::Opponent => self.opponent_size,
        }
    }
}

fn scenario(
    id: &str,
    pro: (u32, SizeClass),
    opp: (u32, SizeClass),
    expected: ExpectedConformity,
    hyps: &[Hypothesis],
) -> Scenario {
    Scenario {
        id: id.to_string(),
        proponent_count: pro.0,
        proponent_size: pro.1,
        opponent_count: opp.0,
        opponent_size: opp.1,
        expected_conformity: expected,
        related_hypotheses: hyps.to_vec(),
    }
}

/// The ten Experiment A conditions.
///
/// Row d mirrors c with small models so that (a, b) and (c, d) are
/// same-model pairs for each size class.
pub fn experiment_a_scenarios() -> Vec<Scenario> {
    use ExpectedConformity::*;
    use Hypothesis::*;
    use SizeClass::*;
    vec![
        scenario("a", (2, Large), (1, Large), Proponent, &[H1]),
        scenario("b", (1, Large), (2, Large), Opponent, &[H1]),
        scenario("c", (2, Small), (1, Small), Proponent, &[H1]),
        scenario("d", (1, Small), (2, Small), Opponent, &[H1]),
        scenario("e", (1, Large), (1, Small), Proponent, &[H2]),
        scenario("f", (1, Small), (1, Large), Opponent, &[H2]),
        scenario("g", (2, Large), (1, Small), Proponent, &[H1, H2]),
        scenario("h", (1, Small), (2, Large), Opponent, &[H1, H2]),
        scenario("i", (2, Small), (1, Large), Undetermined, &[H1, H2]),
        scenario("j", (1, Large), (2, Small), Undetermined, &[H1, H2]),
    ]
}

/// Experiment B conditions: every ratio in both directions, one size class.
pub fn experiment_b_scenarios(ratios: &[u32]) -> Vec<Scenario> {
    let mut out = Vec::with_capacity(ratios.len() * 2);
    for &r in ratios {
        out.push(scenario(
            &format!("{r}:1"),
            (r, SizeClass::Large),
            (1, SizeClass::Large),
            ExpectedConformity::Proponent,
            &[Hypothesis::H3],
        ));
        out.push(scenario(
            &format!("1:{r}"),
            (1, SizeClass::Large),
            (r, SizeClass::Large),
            ExpectedConformity::Opponent,
            &[Hypothesis::H3],
        ));
    }
    out
}

fn topic(id: &str, title: &str, pro: &str, reframed: &str) -> Topic {
    Topic {
        id: id.to_string(),
        title: title.to_string(),
        proponent_statement: pro.to_string(),
        reframed_opponent_statement: Some(reframed.to_string()),
        category: "societal".to_string(),
    }
}

/// The five debate topics with their original and reframed statements.
pub fn default_topics() -> Vec<Topic> {
    vec![
        topic(
            "ubi",
            "Universal Basic Income",
            "Providing universal basic income to all citizens is an essential measure to reduce inequality and strengthen social stability.",
            "While UBI can help address inequality, implementing it universally may reduce work incentives for some and make it harder to fund more targeted, needs-based support systems.",
        ),
        topic(
            "immigration",
            "Immigration Policy",
            "To promote economic growth, immigration policies should be relaxed, and more opportunities should be provided to immigrants.",
            "Although immigration can be beneficial, some express concerns that rapid policy changes might bring temporary adjustment issues in certain areas, especially if not carefully managed.",
        ),
        topic(
            "death_penalty",
            "Death Penalty",
            "The death penalty should be maintained and enforced to deter crime and realize social justice.",
            "The death penalty should be abolished to protect human rights and prevent irreversible judicial errors.",
        ),
        topic(
            "education",
            "Educational Equality",
            "To achieve educational equity, elite education should be reduced, and the public school system should be strengthened to ensure that all students have equal access to educational opportunities.",
            "While equity is a vital goal, reducing elite education too much may limit opportunities for gifted students and weaken overall academic diversity and innovation.",
        ),
        topic(
            "wage_gap",
            "Gender Wage Gap",
            "Governments should enforce comprehensive equal pay legislation to close the gender wage gap.",
            "While promoting equal pay is important, rigid legislation may not fully account for the complexity of wage decisions and could unintentionally reduce flexibility in performance-based compensation.",
        ),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Framing {
    Original,
    Reversed,
}

impl Framing {
    pub fn as_str(self) -> &'static str {
        match self {
            Framing::Original => "original",
            Framing::Reversed => "reversed",
        }
    }
}

impl FromStr for Framing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(Framing::Original),
            "reversed" => Ok(Framing::Reversed),
            other => Err(format!("unknown framing `{other}` (expected original|reversed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    A,
    B,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::A => "A",
            Experiment::B => "B",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Experiment::A),
            "b" => Ok(Experiment::B),
            other => Err(format!("unknown experiment `{other}` (expected a|b)")),
        }
    }
}

/// A model family row: which models play the Large and Small tiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderPairing {
    pub id: String,
    pub large: ModelSpec,
    pub small: ModelSpec,
}

impl ProviderPairing {
    pub fn model(&self, size: SizeClass) -> &ModelSpec {
        match size {
            SizeClass::Large => &self.large,
            SizeClass::Small => &self.small,
        }
    }

    /// A pairing where both tiers use the same model.
    pub fn homogeneous(id: impl Into<String>, model: ModelSpec) -> Self {
        let mut large = model.clone();
        large.size_class = SizeClass::Large;
        let mut small = model;
        small.size_class = SizeClass::Small;
        ProviderPairing { id: id.into(), large, small }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: String,
    pub side: Side,
    pub model: ModelSpec,
}

pub const DEFAULT_MAX_TURNS: u32 = 3;
pub const DEFAULT_SLOTS_PER_SIDE: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateConfig {
    pub experiment: Experiment,
    pub scenario: Scenario,
    pub topic: Topic,
    pub framing: Framing,
    pub pairing: ProviderPairing,
    pub neutral_model: ModelSpec,
    pub rep_index: u32,
    pub seed: u64,
    pub max_turns: u32,
    pub slots_per_side_per_turn: u32,
}

impl DebateConfig {
    /// Debaters in roster order: proponents `pro_1..`, then opponents `opp_1..`.
    pub fn roster(&self) -> Vec<Agent> {
        let mut agents = Vec::new();
        for side in [Side::Proponent, Side::Opponent] {
            let model = self.pairing.model(self.scenario.size(side));
            for k in 1..=self.scenario.count(side) {
                agents.push(Agent { id: format!("{}_{k}", side.id_prefix()), side, model: model.clone() });
            }
        }
        agents
    }

    pub fn side_of(&self, agent_id: &str) -> Option<Side> {
        let (prefix, k) = agent_id.split_once('_')?;
        let k: u32 = k.parse().ok()?;
        let side = match prefix {
            "pro" => Side::Proponent,
            "opp" => Side::Opponent,
            _ => return None,
        };
        (k >= 1 && k <= self.scenario.count(side)).then_some(side)
    }

    pub fn topic_statement(&self) -> Option<&str> {
        self.topic.statement(self.framing)
    }

    pub fn identity(&self) -> RunIdentity {
        RunIdentity {
            experiment: self.experiment,
            scenario_id: self.scenario.id.clone(),
            topic_id: self.topic.id.clone(),
            framing: self.framing,
            pairing: self.pairing.id.clone(),
            rep: self.rep_index,
        }
    }
}

/// Fields that make a run unique within an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunIdentity {
    pub experiment: Experiment,
    pub scenario_id: String,
    pub topic_id: String,
    pub framing: Framing,
    pub pairing: String,
    pub rep: u32,
}

impl RunIdentity {
    /// Canonical text form; the basis of run ids and seeds.
    pub fn canonical(&self) -> String {
        format!(
            "experiment={}|scenario={}|topic={}|framing={}|pairing={}|rep={}",
            self.experiment.as_str(),
            self.scenario_id,
            self.topic_id,
            self.framing.as_str(),
            self.pairing,
            self.rep
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub path: String,
    pub message: String,
}

impl ValidationIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationIssue { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Returns the config unchanged, or every violated invariant.
pub fn validate_config(config: DebateConfig) -> Result<DebateConfig, Vec<ValidationIssue>> {
    let mut issues = Vec::new();
    let s = &config.scenario;
    if s.proponent_count == 0 || s.opponent_count == 0 {
        issues.push(ValidationIssue::new(format!("scenario[{}].counts", s.id), "counts must be positive"));
    }
    if s.id.trim().is_empty() {
        issues.push(ValidationIssue::new("scenario.id", "scenario id must be non-empty"));
    }
    check_topic(&config.topic, "topic", &mut issues);
    if config.framing == Framing::Reversed && config.topic.reframed_opponent_statement.is_none() {
        issues.push(ValidationIssue::new(
            format!("topic[{}].reframed_opponent_statement", config.topic.id),
            format!("reversed framing requires a reframed statement for topic `{}`", config.topic.id),
        ));
    }
    config.pairing.large.check(&format!("pairing[{}].large", config.pairing.id), &mut issues);
    config.pairing.small.check(&format!("pairing[{}].small", config.pairing.id), &mut issues);
    config.neutral_model.check("neutral_model", &mut issues);
    if config.max_turns == 0 {
        issues.push(ValidationIssue::new("max_turns", "max_turns must be positive"));
    }
    if config.slots_per_side_per_turn == 0 {
        issues.push(ValidationIssue::new("slots_per_side_per_turn", "slots_per_side_per_turn must be positive"));
    }
    if issues.is_empty() {
        Ok(config)
    } else {
        Err(issues)
    }
}

pub(crate) fn check_topic(topic: &Topic, path: &str, issues: &mut Vec<ValidationIssue>) {
    if topic.proponent_statement.trim().is_empty() {
        issues.push(ValidationIssue::new(
            format!("{path}[{}].proponent_statement", topic.id),
            "proponent_statement must be non-empty",
        ));
    }
    if topic.id.trim().is_empty() {
        issues.push(ValidationIssue::new(format!("{path}.id"), "topic id must be non-empty"));
    }
}

/// Validates every config and rejects duplicate run identities.
pub fn validate_grid(grid: &[DebateConfig]) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for (i, config) in grid.iter().enumerate() {
        if let Err(errs) = validate_config(config.clone()) {
            issues.extend(errs.into_iter().map(|e| ValidationIssue::new(format!("grid[{i}].{}", e.path), e.message)));
        }
        let id = config.identity();
        if !seen.insert(id.clone()) {
            issues
                .push(ValidationIssue::new(format!("grid[{i}]"), format!("duplicate run identity {}", id.canonical())));
        }
    }
    issues
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub selected_agent_id: String,
    pub selected_side: Side,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub agent_id: String,
    pub side: Side,
    pub model_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub index: u32,
    pub utterances: Vec<Utterance>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarlyTermination {
    pub turn_index: u32,
    pub conceding_agent_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub proponent_supported_turns: u32,
    pub total_evaluated_turns: u32,
}

impl Outcome {
    pub fn recount(turns: &[TurnRecord]) -> Outcome {
        Outcome {
            proponent_supported_turns: turns.iter().filter(|t| t.verdict.selected_side == Side::Proponent).count()
                as u32,
            total_evaluated_turns: turns.len() as u32,
        }
    }

    pub fn cr(&self) -> Option<f64> {
        (self.total_evaluated_turns > 0)
            .then(|| self.proponent_supported_turns as f64 / self.total_evaluated_turns as f64)
    }

    pub fn fully_proponent(&self) -> bool {
        self.total_evaluated_turns > 0 && self.proponent_supported_turns == self.total_evaluated_turns
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTranscript {
    pub config: DebateConfig,
    pub turns: Vec<TurnRecord>,
    pub early_termination: Option<EarlyTermination>,
    pub outcome: Outcome,
}

impl DebateTranscript {
    /// Sides of each turn's verdict, in turn order.
    pub fn verdict_sides(&self) -> Vec<Side> {
        self.turns.iter().map(|t| t.verdict.selected_side).collect()
    }

    /// Checks the structural invariants; returns a description of each violation.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let max = self.config.max_turns as usize;
        if self.turns.is_empty() || self.turns.len() > max {
            out.push(format!("turn count {} outside 1..={max}", self.turns.len()));
        }
        if self.early_termination.is_none() && self.turns.len() != max {
            out.push(format!("{} turns without early termination", self.turns.len()));
        }
        if Outcome::recount(&self.turns) != self.outcome {
            out.push("outcome differs from verdict recount".to_string());
        }
        let slots = self.config.slots_per_side_per_turn as usize;
        for turn in &self.turns {
            match self.config.side_of(&turn.verdict.selected_agent_id) {
                Some(side) if side == turn.verdict.selected_side => {}
                _ => out.push(format!("turn {} verdict side inconsistent with agent id", turn.index)),
            }
            let partial = self.early_termination.as_ref().is_some_and(|e| e.turn_index == turn.index);
            let pro = turn.utterances.iter().filter(|u| u.side == Side::Proponent).count();
            let opp = turn.utterances.len() - pro;
            if !partial && (pro != slots || opp != slots) {
                out.push(format!("turn {} has {pro}/{opp} utterances, expected {slots}/{slots}", turn.index));
            }
        }
        out
    }
}
