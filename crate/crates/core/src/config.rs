//! Experiment configuration file (TOML).
//!
//! ```toml
//! neutral_model = "gpt-4o"
//!
//! [run]
//! reps = 10
//! master_seed = 7
//! concurrency = 4
//! output_dir = "runs/a"
//!
//! [endpoints.openai]
//! dialect = "openai-compatible"
//! base_url = "https://api.openai.com/v1"
//! api_key_env = "OPENAI_API_KEY"
//!
//! [models.gpt-4o]
//! provider = "openai-compatible"
//! model_id = "gpt-4o"
//! endpoint = "openai"
//!
//! [[pairings]]
//! id = "openai"
//! large = "gpt-4o-mini"
//! small = "gpt-3.5-turbo"
//! ```
//!
//! `topics` and `scenarios` default to the built-in sets when omitted.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::{
    AuditLog, BackendError, BackendPolicy, BackendRouter, ChatBackend, Dialect, HttpBackend, ScriptedBackend,
};
use crate::domain::{
    self, ModelSpec, ProviderKind, ProviderPairing, Scenario, SizeClass, Topic, ValidationIssue, DEBATER_MAX_TOKENS,
    DEFAULT_MAX_TURNS, DEFAULT_SLOTS_PER_SIDE, DEFAULT_TEMPERATURE, MODERATOR_MAX_TOKENS,
};
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub reps: u32,
    pub master_seed: u64,
    pub concurrency: usize,
    pub output_dir: PathBuf,
    /// Protocol overrides, intended for tests.
    pub max_turns: u32,
    pub slots_per_side_per_turn: u32,
    pub audit_log: Option<PathBuf>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            reps: 10,
            master_seed: 0,
            concurrency: 4,
            output_dir: PathBuf::from("runs"),
            max_turns: DEFAULT_MAX_TURNS,
            slots_per_side_per_turn: DEFAULT_SLOTS_PER_SIDE,
            audit_log: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub dialect: Dialect,
    pub base_url: String,
    pub api_key_env: String,
    #[serde(default)]
    pub max_concurrent: Option<usize>,
    #[serde(default)]
    pub requests_per_minute: Option<u32>,
    #[serde(default)]
    pub max_retries: Option<u32>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
}

impl EndpointConfig {
    pub fn policy(&self) -> BackendPolicy {
        let mut p = BackendPolicy::default();
        if let Some(n) = self.max_concurrent {
            p.max_concurrent = n;
        }
        if let Some(n) = self.max_retries {
            p.max_retries = n;
        }
        if let Some(t) = self.timeout_secs {
            p.timeout_secs = t;
        }
        p.requests_per_minute = self.requests_per_minute;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub provider: ProviderKind,
    pub model_id: String,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub script: Option<String>,
    #[serde(default)]
    pub temperature: Option<f64>,
    /// Defaults by role: 256 for debaters, 1024 for the moderator.
    #[serde(default)]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingEntry {
    pub id: String,
    pub large: String,
    pub small: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentBSettings {
    pub ratios: Vec<u32>,
    /// Each model forms its own homogeneous grid.
    pub models: Vec<String>,
}

impl Default for ExperimentBSettings {
    fn default() -> Self {
        ExperimentBSettings { ratios: vec![2, 4, 8], models: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub run: RunSettings,
    pub neutral_model: String,
    #[serde(default)]
    pub endpoints: BTreeMap<String, EndpointConfig>,
    #[serde(default)]
    pub models: BTreeMap<String, ModelEntry>,
    #[serde(default)]
    pub pairings: Vec<PairingEntry>,
    #[serde(default = "domain::default_topics")]
    pub topics: Vec<Topic>,
    #[serde(default = "domain::experiment_a_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub experiment_b: ExperimentBSettings,
    /// Directory relative paths (scripts, output) resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelRole {
    Debater,
    Moderator,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve_path(&self.run.output_dir)
    }

    /// Every problem in the file, each with a path to the offending field.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        if self.run.reps == 0 {
            issues.push(ValidationIssue::new("run.reps", "reps must be positive"));
        }
        if self.run.concurrency == 0 {
            issues.push(ValidationIssue::new("run.concurrency", "concurrency must be positive"));
        }
        if self.run.max_turns == 0 || self.run.slots_per_side_per_turn == 0 {
            issues.push(ValidationIssue::new("run", "max_turns and slots_per_side_per_turn must be positive"));
        }
        for (name, m) in &self.models {
            let path = format!("models.{name}");
            match m.provider {
                ProviderKind::Scripted if m.script.is_none() => issues
                    .push(ValidationIssue::new(format!("{path}.script"), "scripted model requires a script reference")),
                ProviderKind::OpenaiCompatible | ProviderKind::AnthropicCompatible => {
                    match &m.endpoint {
                        None => issues
                            .push(ValidationIssue::new(format!("{path}.endpoint"), "live model requires an endpoint")),
                        Some(e) if !self.endpoints.contains_key(e) => issues
                            .push(ValidationIssue::new(format!("{path}.endpoint"), format!("unknown endpoint `{e}`"))),
                        Some(e) => {
                            let expected = match m.provider {
                                ProviderKind::OpenaiCompatible => Dialect::OpenaiCompatible,
                                _ => Dialect::AnthropicCompatible,
                            };
                            if self.endpoints[e].dialect != expected {
                                issues.push(ValidationIssue::new(
                                    format!("{path}.provider"),
                                    format!("provider does not match the dialect of endpoint `{e}`"),
                                ));
                            }
                        }
                    }
                }
                _ => {}
            }
            if let Some(t) = m.temperature {
                if !(0.0..=2.0).contains(&t) {
                    issues.push(ValidationIssue::new(format!("{path}.temperature"), "temperature must be in [0, 2]"));
                }
            }
            if m.max_tokens == Some(0) {
                issues.push(ValidationIssue::new(format!("{path}.max_tokens"), "max_tokens must be positive"));
            }
        }
        let known = |name: &str, path: String, issues: &mut Vec<ValidationIssue>| {
            if !self.models.contains_key(name) {
                issues.push(ValidationIssue::new(path, format!("unknown model `{name}`")));
            }
        };
        known(&self.neutral_model, "neutral_model".into(), &mut issues);
        let mut pairing_ids = HashSet::new();
        for (i, p) in self.pairings.iter().enumerate() {
            known(&p.large, format!("pairings[{i}].large"), &mut issues);
            known(&p.small, format!("pairings[{i}].small"), &mut issues);
            if !pairing_ids.insert(&p.id) {
                issues.push(ValidationIssue::new(format!("pairings[{i}].id"), format!("duplicate pairing `{}`", p.id)));
            }
        }
        let mut topic_ids = HashSet::new();
        for (i, t) in self.topics.iter().enumerate() {
            domain::check_topic(t, &format!("topics[{i}]"), &mut issues);
            if !topic_ids.insert(&t.id) {
                issues.push(ValidationIssue::new(format!("topics[{i}].id"), format!("duplicate topic `{}`", t.id)));
            }
        }
        let mut scenario_ids = HashSet::new();
        for (i, s) in self.scenarios.iter().enumerate() {
            if s.proponent_count == 0 || s.opponent_count == 0 {
                issues.push(ValidationIssue::new(format!("scenarios[{i}].counts"), "counts must be positive"));
            }
            if !scenario_ids.insert(&s.id) {
                issues
                    .push(ValidationIssue::new(format!("scenarios[{i}].id"), format!("duplicate scenario `{}`", s.id)));
            }
        }
        for (i, m) in self.experiment_b.models.iter().enumerate() {
            known(m, format!("experiment_b.models[{i}]"), &mut issues);
        }
        if self.experiment_b.ratios.contains(&0) {
            issues.push(ValidationIssue::new("experiment_b.ratios", "ratios must be positive"));
        }
        issues
    }

    pub fn model_spec(&self, name: &str, size: SizeClass, role: ModelRole) -> Result<ModelSpec> {
        let m = self.models.get(name).ok_or_else(|| CoreError::Config(format!("unknown model `{name}`")))?;
        let default_tokens = match role {
            ModelRole::Debater => DEBATER_MAX_TOKENS,
            ModelRole::Moderator => MODERATOR_MAX_TOKENS,
        };
        Ok(ModelSpec {
            provider: m.provider,
            model_id: m.model_id.clone(),
            size_class: size,
            temperature: m.temperature.unwrap_or(DEFAULT_TEMPERATURE),
            max_tokens: m.max_tokens.unwrap_or(default_tokens),
            endpoint: m.endpoint.clone(),
            script: m.script.clone(),
        })
    }

    pub fn neutral_spec(&self) -> Result<ModelSpec> {
        self.model_spec(&self.neutral_model, SizeClass::Large, ModelRole::Moderator)
    }

    pub fn provider_pairings(&self) -> Result<Vec<ProviderPairing>> {
        self.pairings
            .iter()
            .map(|p| {
                Ok(ProviderPairing {
                    id: p.id.clone(),
                    large: self.model_spec(&p.large, SizeClass::Large, ModelRole::Debater)?,
                    small: self.model_spec(&p.small, SizeClass::Small, ModelRole::Debater)?,
                })
            })
            .collect()
    }

    pub fn experiment_b_pairings(&self) -> Result<Vec<ProviderPairing>> {
        self.experiment_b
            .models
            .iter()
            .map(|name| {
                Ok(ProviderPairing::homogeneous(
                    name.clone(),
                    self.model_spec(name, SizeClass::Large, ModelRole::Debater)?,
                ))
            })
            .collect()
    }

    pub fn topic(&self, id: &str) -> Option<&Topic> {
        self.topics.iter().find(|t| t.id == id)
    }

    /// Builds one backend per endpoint and per script. Credentials are read
    /// here, so a missing variable fails before any debate starts.
    pub fn build_backends(&self, env: &dyn Fn(&str) -> Option<String>) -> Result<BackendRouter> {
        let used_endpoints: HashSet<&str> = self.models.values().filter_map(|m| m.endpoint.as_deref()).collect();
        let mut keyed = Vec::new();
        for (name, ep) in &self.endpoints {
            if used_endpoints.contains(name.as_str()) {
                keyed.push((name, ep, crate::backends::resolve_credential(&ep.api_key_env, env)?));
            }
        }
        let audit = match &self.run.audit_log {
            Some(p) => {
                let path = self.resolve_path(p);
                Some(Arc::new(AuditLog::open(&path).map_err(|e| CoreError::io(path, e))?))
            }
            None => None,
        };
        let mut router = BackendRouter::new();
        for (name, ep, key) in keyed {
            let mut backend = HttpBackend::new(name.clone(), ep.dialect, ep.base_url.clone(), key, ep.policy());
            if let Some(a) = &audit {
                backend = backend.with_audit(a.clone());
            }
            router = router.with_endpoint(name.clone(), Arc::new(backend) as Arc<dyn ChatBackend>);
        }
        let scripts: HashSet<&str> = self.models.values().filter_map(|m| m.script.as_deref()).collect();
        for script in scripts {
            let backend = ScriptedBackend::from_path(&self.resolve_path(Path::new(script))).map_err(|e| match e {
                BackendError::Config(m) => CoreError::Config(m),
                other => CoreError::Backend(other),
            })?;
            router = router.with_script(script, Arc::new(backend) as Arc<dyn ChatBackend>);
        }
        Ok(router)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        neutral_model = "mod"
        [run]
        reps = 2
        [endpoints.oa]
        dialect = "openai-compatible"
        base_url = "http://localhost:1/v1"
        api_key_env = "TEST_KEY_FOR_CONFIG"
        [models.mod]
        provider = "openai-compatible"
        model_id = "gpt-4o"
        endpoint = "oa"
        [models.big]
        provider = "scripted"
        model_id = "big"
        script = "s.toml"
        [[pairings]]
        id = "p"
        large = "big"
        small = "big"
    "#;

    #[test]
    fn defaults_and_role_tokens() {
        let cfg = ExperimentConfig::from_toml(MINIMAL, Path::new("/tmp")).unwrap();
        assert!(cfg.validate().is_empty(), "{:?}", cfg.validate());
        assert_eq!(cfg.topics.len(), 5);
        assert_eq!(cfg.scenarios.len(), 10);
        assert_eq!(cfg.neutral_spec().unwrap().max_tokens, 1024);
        let p = &cfg.provider_pairings().unwrap()[0];
        assert_eq!(p.large.max_tokens, 256);
        assert_eq!(p.small.size_class, SizeClass::Small);
        assert_eq!(p.large.temperature, 0.7);
    }

    #[test]
    fn missing_credential_fails_at_startup() {
        let cfg = ExperimentConfig::from_toml(MINIMAL, Path::new("/tmp")).unwrap();
        let err = cfg.build_backends(&|_| None).err().unwrap();
        assert!(err.is_validation());
        assert!(err.to_string().contains("TEST_KEY_FOR_CONFIG"));
    }

    #[test]
    fn reports_every_issue() {
        let text = MINIMAL.replace("reps = 2", "reps = 0").replace("small = \"big\"", "small = \"nope\"");
        let cfg = ExperimentConfig::from_toml(&text, Path::new("/tmp")).unwrap();
        let issues = cfg.validate();
        assert!(issues.iter().any(|i| i.path == "run.reps"));
        assert!(issues.iter().any(|i| i.path == "pairings[0].small"));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(ExperimentConfig::from_toml(&text, Path::new("/tmp")).is_err());
    }
}
