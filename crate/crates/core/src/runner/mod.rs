//! Concurrent, resumable execution of experiment grids.

mod grid;
mod probe;
mod store;

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::backends::ChatBackend;
use crate::domain::{validate_grid, DebateConfig};
use crate::error::{CoreError, Result};
use crate::protocol::{run_debate, DebateFailure, DebateRun};

pub use grid::{build_experiment_a_grid, build_experiment_b_grid, build_grid, config_hash, derive_seed, run_id};
pub use probe::{bias_probe, classify_probe_reply, BiasProbeResult, ProbeAnswer};
pub use store::{
    FailureRecord, Store, StoreWriter, StoredDebate, SummaryRow, FAILURES_FILE, SUMMARY_FILE, TRANSCRIPTS_FILE,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub concurrency: usize,
    pub resume: bool,
    /// Stop dispatching after this many new executions.
    pub max_new_runs: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { concurrency: 4, resume: false, max_new_runs: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub done: usize,
    pub failed: usize,
    /// Already done in the store before this invocation.
    pub skipped: usize,
    /// Pending runs left undispatched because of `max_new_runs`.
    pub not_started: usize,
    pub failures: Vec<FailureRecord>,
}

struct Finished {
    index: usize,
    started_at: DateTime<Utc>,
    finished_at: DateTime<Utc>,
    result: std::result::Result<DebateRun, DebateFailure>,
}

/// Executes every pending run of `grid`, appending results to `output_dir`.
pub fn run_grid(
    grid: &[DebateConfig],
    backend: &dyn ChatBackend,
    output_dir: &Path,
    options: &RunOptions,
) -> Result<RunReport> {
    let issues = validate_grid(grid);
    if !issues.is_empty() {
        return Err(CoreError::Validation(issues));
    }
    let store = Store::new(output_dir);
    let existing = if store.has_transcripts() {
        if !options.resume {
            return Err(CoreError::Integrity(format!(
                "{} already holds transcripts; resume it or choose another output directory",
                store.transcripts_path().display()
            )));
        }
        store.load_transcripts()?
    } else {
        Vec::new()
    };

    let ids: Vec<String> = grid.iter().map(|c| run_id(&c.identity())).collect();
    let hashes: Vec<String> = grid.iter().map(config_hash).collect();
    let by_id: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut done: HashSet<&str> = HashSet::new();
    for d in &existing {
        if let Some(&i) = by_id.get(d.run_id.as_str()) {
            if hashes[i] != d.config_hash {
                return Err(CoreError::Integrity(format!(
                    "run {} is stored with a different configuration; refusing to mix grids",
                    d.run_id
                )));
            }
            done.insert(ids[i].as_str());
        }
    }

    let pending_all: Vec<usize> = (0..grid.len()).filter(|&i| !done.contains(ids[i].as_str())).collect();
    let limit = options.max_new_runs.unwrap_or(usize::MAX).min(pending_all.len());
    let pending = &pending_all[..limit];
    let mut report = RunReport {
        skipped: grid.len() - pending_all.len(),
        not_started: pending_all.len() - limit,
        ..RunReport::default()
    };

    let mut writer = StoreWriter::open(store, &existing)?;
    if pending.is_empty() {
        return Ok(report);
    }
    let workers = options.concurrency.max(1).min(pending.len());
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<Finished>();
    let total = pending.len();

    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&index) = pending.get(k) else { break };
                let started_at = Utc::now();
                let result = run_debate(&grid[index], backend);
                let finished = Finished { index, started_at, finished_at: Utc::now(), result };
                if tx.send(finished).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut first_error = None;
        for (n, f) in rx.iter().enumerate() {
            let config = &grid[f.index];
            let id = &ids[f.index];
            let write = match f.result {
                Ok(run) => {
                    report.done += 1;
                    log::info!(
                        "[{}/{total}] done {id} scenario={} topic={} pairing={} rep={} cr={}/{}",
                        n + 1,
                        config.scenario.id,
                        config.topic.id,
                        config.pairing.id,
                        config.rep_index,
                        run.transcript.outcome.proponent_supported_turns,
                        run.transcript.outcome.total_evaluated_turns
                    );
                    writer.append_success(&StoredDebate::from_run(config, run, f.started_at, f.finished_at))
                }
                Err(failure) => {
                    report.failed += 1;
                    log::warn!("[{}/{total}] failed {id}: {failure}", n + 1);
                    let record = FailureRecord {
                        run_id: id.clone(),
                        stage: format!("{:?}", failure.stage).to_lowercase(),
                        error: failure.error.clone(),
                        attempts: failure.attempts,
                        attempt_log: failure.attempt_log,
                    };
                    let r = writer.append_failure(&record);
                    report.failures.push(record);
                    r
                }
            };
            if let Err(e) = write {
                // stop dispatching; in-flight debates drain into the closed channel
                next.store(usize::MAX / 2, Ordering::SeqCst);
                first_error.get_or_insert(e);
            }
        }
        first_error.map_or(Ok(()), Err)
    })?;
    Ok(report)
}
