//! Experiment grids and deterministic run identity.

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::domain::{self, DebateConfig, Experiment, Framing, ProviderPairing, RunIdentity, Scenario};
use crate::error::{CoreError, Result};

/// First 128 bits of SHA-256 over the canonical identity, as hex.
pub fn run_id(identity: &RunIdentity) -> String {
    let digest = Sha256::digest(identity.canonical().as_bytes());
    hex::encode(&digest[..16])
}

/// Per-debate seed derived from the master seed and the run identity.
pub fn derive_seed(master_seed: u64, identity: &RunIdentity) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(identity.canonical().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// SHA-256 of the config's JSON form; detects a changed grid under a reused run id.
pub fn config_hash(config: &DebateConfig) -> String {
    let json = serde_json::to_vec(config).expect("debate config serializes");
    hex::encode(Sha256::digest(&json))
}

fn build(
    cfg: &ExperimentConfig,
    experiment: Experiment,
    scenarios: &[Scenario],
    pairings: &[ProviderPairing],
    framing: Framing,
) -> Result<Vec<DebateConfig>> {
    if cfg.topics.is_empty() {
        return Err(CoreError::Config("grid needs at least one topic".into()));
    }
    if pairings.is_empty() {
        return Err(CoreError::Config(format!("experiment {} needs at least one model pairing", experiment.as_str())));
    }
    if scenarios.is_empty() {
        return Err(CoreError::Config("grid needs at least one scenario".into()));
    }
    let neutral = cfg.neutral_spec()?;
    let mut grid = Vec::with_capacity(scenarios.len() * cfg.topics.len() * pairings.len() * cfg.run.reps as usize);
    for scenario in scenarios {
        for topic in &cfg.topics {
            for pairing in pairings {
                for rep in 0..cfg.run.reps {
                    let mut config = DebateConfig {
                        experiment,
                        scenario: scenario.clone(),
                        topic: topic.clone(),
                        framing,
                        pairing: pairing.clone(),
                        neutral_model: neutral.clone(),
                        rep_index: rep,
                        seed: 0,
                        max_turns: cfg.run.max_turns,
                        slots_per_side_per_turn: cfg.run.slots_per_side_per_turn,
                    };
                    config.seed = derive_seed(cfg.run.master_seed, &config.identity());
                    grid.push(config);
                }
            }
        }
    }
    Ok(grid)
}

/// scenarios × topics × pairings × reps.
pub fn build_experiment_a_grid(cfg: &ExperimentConfig, framing: Framing) -> Result<Vec<DebateConfig>> {
    build(cfg, Experiment::A, &cfg.scenarios, &cfg.provider_pairings()?, framing)
}

/// Both ratio directions × topics × one homogeneous pairing per model × reps.
pub fn build_experiment_b_grid(cfg: &ExperimentConfig, framing: Framing) -> Result<Vec<DebateConfig>> {
    let scenarios = domain::experiment_b_scenarios(&cfg.experiment_b.ratios);
    build(cfg, Experiment::B, &scenarios, &cfg.experiment_b_pairings()?, framing)
}

pub fn build_grid(cfg: &ExperimentConfig, experiment: Experiment, framing: Framing) -> Result<Vec<DebateConfig>> {
    match experiment {
        Experiment::A => build_experiment_a_grid(cfg, framing),
        Experiment::B => build_experiment_b_grid(cfg, framing),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Experiment;

    fn identity(rep: u32) -> RunIdentity {
        RunIdentity {
            experiment: Experiment::A,
            scenario_id: "a".into(),
            topic_id: "ubi".into(),
            framing: Framing::Original,
            pairing: "openai".into(),
            rep,
        }
    }

    #[test]
    fn run_id_is_128_bit_hex_and_stable() {
        let id = run_id(&identity(0));
        assert_eq!(id.len(), 32);
        assert_eq!(id, run_id(&identity(0)));
        assert_ne!(id, run_id(&identity(1)));
    }

    #[test]
    fn seed_depends_on_master_and_identity() {
        assert_eq!(derive_seed(1, &identity(0)), derive_seed(1, &identity(0)));
        assert_ne!(derive_seed(1, &identity(0)), derive_seed(2, &identity(0)));
        assert_ne!(derive_seed(1, &identity(0)), derive_seed(1, &identity(1)));
    }
}
