#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use conformity_core::backends::{BackendRouter, ChatBackend, ModeratorRule, Script, ScriptedBackend};
use conformity_core::config::ExperimentConfig;
use conformity_core::domain::DebateConfig;
use conformity_core::protocol::run_debate;
use conformity_core::runner::StoredDebate;

pub const SCRIPT_KEY: &str = "fixture.toml";

/// All-scripted config: one pairing, the default topics and scenarios.
pub fn scripted_config(reps: u32, master_seed: u64) -> ExperimentConfig {
    let text = format!(
        r#"
        neutral_model = "judge"
        [run]
        reps = {reps}
        master_seed = {master_seed}
        concurrency = 4
        [models.judge]
        provider = "scripted"
        model_id = "judge-sim"
        script = "{SCRIPT_KEY}"
        [models.big]
        provider = "scripted"
        model_id = "big-sim"
        script = "{SCRIPT_KEY}"
        [models.small]
        provider = "scripted"
        model_id = "small-sim"
        script = "{SCRIPT_KEY}"
        [[pairings]]
        id = "sim"
        large = "big"
        small = "small"
        [experiment_b]
        ratios = [2, 4, 8]
        models = ["big", "small"]
        "#
    );
    let cfg = ExperimentConfig::from_toml(&text, Path::new(".")).expect("fixture config parses");
    assert!(cfg.validate().is_empty(), "{:?}", cfg.validate());
    cfg
}

pub fn template_script() -> Script {
    Script::default().with_template("{agent_id} makes point {slot} of turn {turn} on {topic}.")
}

/// Moderator that picks the majority side with probability `p`.
pub fn majority_script(p: f64) -> Script {
    template_script().with_rule(ModeratorRule { p_majority: Some(p), ..ModeratorRule::default() })
}

pub fn router(script: Script) -> BackendRouter {
    router_with(Arc::new(ScriptedBackend::new(script)))
}

pub fn router_with(backend: Arc<dyn ChatBackend>) -> BackendRouter {
    BackendRouter::new().with_script(SCRIPT_KEY, backend)
}

/// Runs a grid in memory with fixed timestamps, in grid order.
pub fn simulate(grid: &[DebateConfig], backend: &dyn ChatBackend) -> Vec<StoredDebate> {
    let at = chrono::DateTime::<chrono::Utc>::from_timestamp(1_700_000_000, 0).unwrap();
    grid.iter()
        .map(|c| StoredDebate::from_run(c, run_debate(c, backend).expect("scripted debate completes"), at, at))
        .collect()
}
