//! Subcommands behind the `conformity` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use conformity_core::analysis::{analyze, figure_files, render_text, AnalysisSpec, ReportBundle};
use conformity_core::config::ExperimentConfig;
use conformity_core::domain::{Experiment, Framing};
use conformity_core::runner::{bias_probe, build_grid, run_grid, RunOptions, Store};
use conformity_core::CoreError;
use conformity_stats::Correction;

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_EXECUTION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "conformity",
    version,
    about = "Run multi-agent debate conformity experiments and analyze the results"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment grid and append results to the store.
    Run(RunArgs),
    /// Print the analysis of a store.
    Analyze(AnalyzeArgs),
    /// Print the analysis and optionally write figure-data files.
    Report(ReportArgs),
    /// Ask the neutral model for its baseline leaning on one topic.
    ProbeBias(ProbeArgs),
    /// Check a config file and print every problem found.
    ValidateConfig(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment to run: a (majority and intelligence) or b (ratio sweep).
    pub experiment: Experiment,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub reps: Option<u32>,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Continue a partially written store.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, default_value = "original")]
    pub framing: Framing,
    /// Store directory; defaults to the config's output_dir.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Stop after this many new debates.
    #[arg(long)]
    pub max_runs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Store directory written by `run`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = conformity_stats::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value = "yates")]
    pub correction: Correction,
    /// Run chi-square even when an expected count is below 5.
    #[arg(long)]
    pub force_chi_square: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Print the report bundle as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Directory for report.txt and the CSV figure data.
    #[arg(long)]
    pub figures: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub topic: String,
    /// Number of trials.
    #[arg(long, default_value_t = 20)]
    pub n: u32,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Execution(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Execution(_) => EXIT_EXECUTION,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Execution(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Execution(e.to_string())
        }
    }
}

type CliResult = Result<(), CliError>;

pub fn execute(cli: Cli) -> CliResult {
    match cli.command {
        Command::Run(a) => run(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Report(a) => report(a),
        Command::ProbeBias(a) => probe(a),
        Command::ValidateConfig(a) => validate(a),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let cfg = ExperimentConfig::load(path).map_err(|e| match e {
        CoreError::Io { .. } => CliError::Validation(e.to_string()),
        other => other.into(),
    })?;
    let issues = cfg.validate();
    if !issues.is_empty() {
        return Err(CoreError::Validation(issues).into());
    }
    Ok(cfg)
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok()
}

fn run(a: RunArgs) -> CliResult {
    let mut cfg = load_config(&a.config)?;
    if let Some(r) = a.reps {
        cfg.run.reps = r;
    }
    if let Some(s) = a.seed {
        cfg.run.master_seed = s;
    }
    if let Some(c) = a.concurrency {
        cfg.run.concurrency = c;
    }
    let issues = cfg.validate();
    if !issues.is_empty() {
        return Err(CoreError::Validation(issues).into());
    }
    let output = a.output.unwrap_or_else(|| cfg.output_dir());
    let grid = build_grid(&cfg, a.experiment, a.framing)?;
    let backends = cfg.build_backends(&env_var)?;
    log::info!(
        "experiment {} ({}): {} debates into {}",
        a.experiment.as_str(),
        a.framing.as_str(),
        grid.len(),
        output.display()
    );
    let options = RunOptions { concurrency: cfg.run.concurrency, resume: a.resume, max_new_runs: a.max_runs };
    let report = run_grid(&grid, &backends, &output, &options)?;
    println!(
        "done {}, failed {}, already stored {}, not started {}",
        report.done, report.failed, report.skipped, report.not_started
    );
    if report.failed > 0 {
        return Err(CliError::Execution(format!(
            "{} debates failed; see {} and rerun with --resume",
            report.failed,
            Store::new(&output).failures_path().display()
        )));
    }
    Ok(())
}

fn bundle(a: &AnalysisArgs) -> Result<ReportBundle, CliError> {
    let store = Store::new(&a.input);
    if !store.has_transcripts() {
        return Err(CliError::Validation(format!("no transcripts in {}", a.input.display())));
    }
    let debates = store.load_transcripts()?;
    let failed = store.load_failures()?.len();
    let spec = AnalysisSpec {
        alpha: a.alpha,
        correction: a.correction,
        force_chi_square: a.force_chi_square,
        ..AnalysisSpec::default()
    };
    Ok(analyze(&debates, failed, &spec)?)
}

fn analyze_cmd(a: AnalyzeArgs) -> CliResult {
    let b = bundle(&a.analysis)?;
    if a.json {
        let text = serde_json::to_string_pretty(&b).map_err(|e| CliError::Execution(e.to_string()))?;
        println!("{text}");
    } else {
        print!("{}", render_text(&b));
    }
    Ok(())
}

fn report(a: ReportArgs) -> CliResult {
    let b = bundle(&a.analysis)?;
    let text = render_text(&b);
    print!("{text}");
    if let Some(dir) = &a.figures {
        let write = |name: &str, body: &str| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| CliError::Execution(format!("{}: {e}", path.display())))
        };
        fs::create_dir_all(dir).map_err(|e| CliError::Execution(format!("{}: {e}", dir.display())))?;
        write("report.txt", &text)?;
        for (name, body) in figure_files(&b) {
            write(&name, &body)?;
        }
        log::info!("figure data written to {}", dir.display());
    }
    Ok(())
}

fn probe(a: ProbeArgs) -> CliResult {
    let cfg = load_config(&a.config)?;
    let topic = cfg.topic(&a.topic).ok_or_else(|| {
        let known: Vec<&str> = cfg.topics.iter().map(|t| t.id.as_str()).collect();
        CliError::Validation(format!("unknown topic `{}` (known: {})", a.topic, known.join(", ")))
    })?;
    if a.n == 0 {
        return Err(CliError::Validation("--n must be positive".into()));
    }
    let neutral = cfg.neutral_spec()?;
    let backends = cfg.build_backends(&env_var)?;
    let r = bias_probe(topic, &neutral, a.n, a.seed.unwrap_or(cfg.run.master_seed), &backends)?;
    println!(
        "{} on {}: pros {:.1}%, cons {:.1}%, no response {:.1}% over {} trials ({} unclassified)",
        r.model_id,
        r.topic_id,
        100.0 * r.pros_fraction(),
        100.0 * r.cons_fraction(),
        100.0 * r.no_response_fraction(),
        r.trials,
        r.unclassified
    );
    Ok(())
}

fn validate(a: ValidateArgs) -> CliResult {
    let cfg = load_config(&a.config)?;
    for experiment in [Experiment::A, Experiment::B] {
        match build_grid(&cfg, experiment, Framing::Original) {
            Ok(g) => println!("experiment {}: {} debates", experiment.as_str(), g.len()),
            Err(e) => println!("experiment {}: not runnable ({e})", experiment.as_str()),
        }
    }
    println!("{}: ok", a.config.display());
    Ok(())
}
