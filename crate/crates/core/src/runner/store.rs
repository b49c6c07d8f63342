//! Line-delimited transcript store, summary table and failure log.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::grid::{config_hash, run_id};
use crate::backends::{AttemptRecord, Usage};
use crate::domain::{DebateConfig, DebateTranscript, Experiment, Framing};
use crate::error::{CoreError, Result};
use crate::protocol::DebateRun;

pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FAILURES_FILE: &str = "failures.jsonl";

/// One line of the transcript store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredDebate {
    pub run_id: String,
    pub experiment: Experiment,
    pub scenario_id: String,
    pub topic_id: String,
    pub framing: Framing,
    pub pairing: String,
    pub rep: u32,
    pub seed: u64,
    pub config_hash: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    /// Model names reported by providers, keyed by agent id.
    #[serde(default)]
    pub model_versions: BTreeMap<String, String>,
    #[serde(default)]
    pub usage: Option<Usage>,
    #[serde(flatten)]
    pub transcript: DebateTranscript,
}

impl StoredDebate {
    pub fn from_run(
        config: &DebateConfig,
        run: DebateRun,
        started_at: DateTime<Utc>,
        finished_at: DateTime<Utc>,
    ) -> Self {
        StoredDebate {
            run_id: run_id(&config.identity()),
            experiment: config.experiment,
            scenario_id: config.scenario.id.clone(),
            topic_id: config.topic.id.clone(),
            framing: config.framing,
            pairing: config.pairing.id.clone(),
            rep: config.rep_index,
            seed: config.seed,
            config_hash: config_hash(config),
            started_at,
            finished_at,
            model_versions: run.reported_models,
            usage: run.usage,
            transcript: run.transcript,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run_id: String,
    pub experiment: Experiment,
    pub scenario_id: String,
    pub topic_id: String,
    pub pairing: String,
    pub rep: u32,
    pub framing: Framing,
    pub cr: f64,
    pub fully_pro: u8,
    pub total_turns: u32,
    pub early_term: u8,
}

impl SummaryRow {
    pub fn from_stored(d: &StoredDebate) -> Self {
        let o = d.transcript.outcome;
        SummaryRow {
            run_id: d.run_id.clone(),
            experiment: d.experiment,
            scenario_id: d.scenario_id.clone(),
            topic_id: d.topic_id.clone(),
            pairing: d.pairing.clone(),
            rep: d.rep,
            framing: d.framing,
            cr: o.cr().unwrap_or(0.0),
            fully_pro: o.fully_proponent() as u8,
            total_turns: o.total_evaluated_turns,
            early_term: d.transcript.early_termination.is_some() as u8,
        }
    }

    /// Proponent-supported turns recovered from the stored rate.
    pub fn proponent_turns(&self) -> u32 {
        (self.cr * self.total_turns as f64).round() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub run_id: String,
    pub stage: String,
    pub error: String,
    pub attempts: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempt_log: Vec<AttemptRecord>,
}

/// Read access to a store directory.
#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Store { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn transcripts_path(&self) -> PathBuf {
        self.dir.join(TRANSCRIPTS_FILE)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join(SUMMARY_FILE)
    }

    pub fn failures_path(&self) -> PathBuf {
        self.dir.join(FAILURES_FILE)
    }

    /// True when the store already holds at least one byte of transcripts.
    pub fn has_transcripts(&self) -> bool {
        fs::metadata(self.transcripts_path()).is_ok_and(|m| m.len() > 0)
    }

    /// Reads every complete record. An unterminated final line is an
    /// interrupted write and is skipped; any other bad line is an error.
    pub fn load_transcripts(&self) -> Result<Vec<StoredDebate>> {
        read_jsonl(&self.transcripts_path())
    }

    pub fn load_failures(&self) -> Result<Vec<FailureRecord>> {
        read_jsonl(&self.failures_path())
    }

    pub fn load_summary(&self) -> Result<Vec<SummaryRow>> {
        let path = self.summary_path();
        let mut reader = csv::Reader::from_path(&path).map_err(|e| CoreError::Corrupt {
            path: path.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        reader
            .deserialize()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| CoreError::Corrupt { path: path.clone(), line: i + 2, message: e.to_string() }))
            .collect()
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CoreError::io(path, e)),
    };
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| CoreError::io(path, e))?;
        if n == 0 {
            break;
        }
        number += 1;
        let terminated = line.ends_with('\n');
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line.trim_end()) {
            Ok(v) => out.push(v),
            Err(_) if !terminated => {
                log::warn!("{}: ignoring truncated final line {number}", path.display());
            }
            Err(e) => {
                return Err(CoreError::Corrupt { path: path.to_path_buf(), line: number, message: e.to_string() });
            }
        }
    }
    Ok(out)
}

/// Cuts a file back to its last newline, dropping an interrupted write.
fn trim_partial_tail(path: &Path) -> Result<()> {
    let mut file = match OpenOptions::new().read(true).write(true).open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(CoreError::io(path, e)),
    };
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| CoreError::io(path, e))?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    file.set_len(keep as u64).map_err(|e| CoreError::io(path, e))?;
    file.seek(SeekFrom::End(0)).map_err(|e| CoreError::io(path, e))?;
    Ok(())
}

/// The single writer for a store. The summary table is rewritten from the
/// existing transcripts on open, so it always matches them.
pub struct StoreWriter {
    store: Store,
    transcripts: File,
    failures: File,
    summary: csv::Writer<File>,
}

impl StoreWriter {
    pub fn open(store: Store, existing: &[StoredDebate]) -> Result<Self> {
        fs::create_dir_all(store.dir()).map_err(|e| CoreError::io(store.dir(), e))?;
        trim_partial_tail(&store.transcripts_path())?;
        trim_partial_tail(&store.failures_path())?;
        let append =
            |p: PathBuf| OpenOptions::new().create(true).append(true).open(&p).map_err(|e| CoreError::io(p, e));
        let transcripts = append(store.transcripts_path())?;
        let failures = append(store.failures_path())?;
        let summary_path = store.summary_path();
        let file = File::create(&summary_path).map_err(|e| CoreError::io(&summary_path, e))?;
        let mut summary = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        summary
            .write_record([
                "run_id",
                "experiment",
                "scenario_id",
                "topic_id",
                "pairing",
                "rep",
                "framing",
                "cr",
                "fully_pro",
                "total_turns",
                "early_term",
            ])
            .map_err(|e| CoreError::io(&summary_path, e.into()))?;
        for d in existing {
            summary.serialize(SummaryRow::from_stored(d)).map_err(|e| CoreError::io(&summary_path, e.into()))?;
        }
        summary.flush().map_err(|e| CoreError::io(&summary_path, e))?;
        Ok(StoreWriter { store, transcripts, failures, summary })
    }

    pub fn append_success(&mut self, debate: &StoredDebate) -> Result<()> {
        let line = serde_json::to_string(debate).expect("stored debate serializes");
        let path = self.store.transcripts_path();
        writeln!(self.transcripts, "{line}").map_err(|e| CoreError::io(&path, e))?;
        self.transcripts.flush().map_err(|e| CoreError::io(&path, e))?;
        let spath = self.store.summary_path();
        self.summary.serialize(SummaryRow::from_stored(debate)).map_err(|e| CoreError::io(&spath, e.into()))?;
        self.summary.flush().map_err(|e| CoreError::io(&spath, e))
    }

    pub fn append_failure(&mut self, failure: &FailureRecord) -> Result<()> {
        let line = serde_json::to_string(failure).expect("failure record serializes");
        let path = self.store.failures_path();
        writeln!(self.failures, "{line}").map_err(|e| CoreError::io(&path, e))?;
        self.failures.flush().map_err(|e| CoreError::io(&path, e))
    }
}
