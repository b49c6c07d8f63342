//! Turns a transcript store into conformity tables, hypothesis tests and
//! figure data. Every function here is pure over its input.

mod render;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use conformity_stats::special::std_normal_quantile;
use conformity_stats::{
    chi2_independence, games_howell, levene_test, one_way_anova, partial_eta_squared, posthoc_power_total,
    shapiro_wilk, two_way_anova, welch_anova, AnovaTable, Center, ChiSquareOptions, ContingencyTable2x2, Correction,
    DegreesOfFreedom, EffectSize, Observation, PairwiseComparison, Source, TestReport, DEFAULT_ALPHA,
};
use serde::{Deserialize, Serialize};

use crate::domain::{Experiment, Framing, Intelligence, Outcome, Scenario, Side};
use crate::error::{CoreError, Result};
use crate::metrics::{build_contingency, summarize, ConformitySummary, DebateTally};
use crate::runner::{StoredDebate, SummaryRow};

pub use render::{figure_files, render_text};

/// Analysis cuts applied to a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    ByScenario,
    ByTopic,
    ByRatio,
    /// a, c against b, d.
    H1Pool,
    /// e against f.
    H2Pool,
}

pub const ALL_GROUPINGS: [Grouping; 5] =
    [Grouping::ByScenario, Grouping::ByTopic, Grouping::ByRatio, Grouping::H1Pool, Grouping::H2Pool];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    pub groupings: Vec<Grouping>,
    pub alpha: f64,
    pub correction: Correction,
    /// Run chi-square even when an expected count is below 5.
    pub force_chi_square: bool,
    /// Ratios the sweep expects for every model.
    pub ratios: Vec<u32>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            groupings: ALL_GROUPINGS.to_vec(),
            alpha: DEFAULT_ALPHA,
            correction: Correction::Yates,
            force_chi_square: false,
            ratios: vec![2, 4, 8],
        }
    }
}

impl AnalysisSpec {
    fn wants(&self, g: Grouping) -> bool {
        self.groupings.contains(&g)
    }
}

/// A result, or the reason it could not be produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section<T> {
    Done(T),
    Skipped(String),
}

impl<T> Section<T> {
    pub fn done(&self) -> Option<&T> {
        match self {
            Section::Done(v) => Some(v),
            Section::Skipped(_) => None,
        }
    }

    fn from_result<E: std::fmt::Display>(r: std::result::Result<T, E>) -> Self {
        match r {
            Ok(v) => Section::Done(v),
            Err(e) => Section::Skipped(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub experiment: Experiment,
    pub scenario_id: String,
    pub summary: ConformitySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub name: String,
    pub table: ContingencyTable2x2,
    pub test: Section<TestReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEffect {
    pub source: Source,
    pub effect: Section<EffectSize>,
    pub power: Section<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoWayResult {
    pub table: AnovaTable,
    pub effects: Vec<SourceEffect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Headline {
    Classic,
    Welch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorResult {
    pub factor: String,
    pub levels: Vec<LevelStats>,
    pub n_total: usize,
    pub shapiro_wilk: Section<TestReport>,
    pub levene: Section<TestReport>,
    pub classic: Section<TestReport>,
    pub welch: Section<TestReport>,
    pub headline: Headline,
    pub headline_reason: String,
    /// From the one-way sum-of-squares decomposition, whichever test is headline.
    pub effect: Section<EffectSize>,
    pub power: Section<f64>,
    pub games_howell: Section<Vec<PairwiseComparison>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramCell {
    pub experiment: Experiment,
    pub topic_id: String,
    pub scenario_id: String,
    /// `counts[k]` holds debates with per-debate CR rounded to `k / turns`.
    pub turns: u32,
    pub counts: Vec<u64>,
    /// Early-terminated debates per bucket; already included in `counts`.
    pub early_terminated: Vec<u64>,
}

impl HistogramCell {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub pairing: String,
    pub ratio: u32,
    pub majority_turns: u64,
    pub total_turns: u64,
    pub cr_majority: f64,
    pub ci99: Interval,
    pub debates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSweep {
    pub points: Vec<SweepPoint>,
    /// Expected (pairing, ratio) levels with no data.
    pub gaps: Vec<String>,
}

/// Everything computed for one framing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingReport {
    pub framing: Framing,
    pub debates: usize,
    pub scenarios: BTreeMap<String, Scenario>,
    pub table2: Vec<Table2Row>,
    pub chi_square: Vec<ChiSquareResult>,
    pub chi_square_skipped: Vec<String>,
    pub two_way: Option<Section<TwoWayResult>>,
    pub factors: Vec<Section<FactorResult>>,
    pub histogram: Vec<HistogramCell>,
    pub ratio_sweep: Option<Section<RatioSweep>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub spec: AnalysisSpec,
    pub debates: usize,
    pub failed_runs: usize,
    pub sections: Vec<FramingReport>,
}

fn scenario_key(experiment: Experiment, id: &str) -> String {
    format!("{}/{id}", experiment.as_str())
}

/// Checks the store before analysis: unique run ids and sound transcripts.
pub fn check_store(debates: &[StoredDebate]) -> Result<()> {
    if debates.is_empty() {
        return Err(CoreError::Integrity("store holds no transcripts".into()));
    }
    let mut seen = HashSet::new();
    for d in debates {
        if !seen.insert(d.run_id.as_str()) {
            return Err(CoreError::Integrity(format!("run {} appears more than once", d.run_id)));
        }
        let v = d.transcript.invariant_violations();
        if !v.is_empty() {
            return Err(CoreError::Integrity(format!("run {}: {}", d.run_id, v.join("; "))));
        }
    }
    Ok(())
}

pub fn analyze(debates: &[StoredDebate], failed_runs: usize, spec: &AnalysisSpec) -> Result<ReportBundle> {
    check_store(debates)?;
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(CoreError::Config(format!("alpha must lie in (0, 1), got {}", spec.alpha)));
    }
    // completion order must not leak into floating-point sums
    let mut sorted: Vec<&StoredDebate> = debates.iter().collect();
    sorted.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let mut by_framing: BTreeMap<&'static str, (Framing, Vec<&StoredDebate>)> = BTreeMap::new();
    for d in sorted {
        by_framing.entry(d.framing.as_str()).or_insert_with(|| (d.framing, Vec::new())).1.push(d);
    }
    let sections = by_framing.into_values().map(|(framing, ds)| analyze_framing(framing, &ds, spec)).collect();
    Ok(ReportBundle { spec: spec.clone(), debates: debates.len(), failed_runs, sections })
}

fn analyze_framing(framing: Framing, debates: &[&StoredDebate], spec: &AnalysisSpec) -> FramingReport {
    let mut scenarios = BTreeMap::new();
    for d in debates {
        scenarios
            .entry(scenario_key(d.experiment, &d.scenario_id))
            .or_insert_with(|| d.transcript.config.scenario.clone());
    }
    let exp_a: Vec<&StoredDebate> = debates.iter().copied().filter(|d| d.experiment == Experiment::A).collect();
    let exp_b: Vec<&StoredDebate> = debates.iter().copied().filter(|d| d.experiment == Experiment::B).collect();

    let table2 = if spec.wants(Grouping::ByScenario) { table2(debates) } else { Vec::new() };

    let mut chi_square = Vec::new();
    let mut chi_square_skipped = Vec::new();
    let options = ChiSquareOptions { correction: spec.correction, alpha: spec.alpha, force: spec.force_chi_square };
    let mut pool = |name: &str, a: &[&str], b: &[&str], debates: &[&StoredDebate]| {
        let pick = |ids: &[&str]| -> Vec<Outcome> {
            debates.iter().filter(|d| ids.contains(&d.scenario_id.as_str())).map(|d| d.transcript.outcome).collect()
        };
        let labels = [a.join("+"), b.join("+")];
        match build_contingency(&pick(a), &pick(b), [&labels[0], &labels[1]]) {
            Ok(table) => {
                let test = Section::from_result(chi2_independence(&table, options));
                chi_square.push(ChiSquareResult { name: name.to_string(), table, test });
            }
            Err(e) => chi_square_skipped.push(format!("{name}: skipped, {e}")),
        }
    };
    if spec.wants(Grouping::H1Pool) {
        pool("H1 pool", &["a", "c"], &["b", "d"], &exp_a);
    }
    if spec.wants(Grouping::H2Pool) {
        pool("H2 pool", &["e"], &["f"], &exp_a);
        let pairings: BTreeSet<&str> = exp_a.iter().map(|d| d.pairing.as_str()).collect();
        for p in pairings {
            let subset: Vec<&StoredDebate> = exp_a.iter().copied().filter(|d| d.pairing == p).collect();
            pool(&format!("H2 pairing {p}"), &["e"], &["f"], &subset);
        }
    }

    let (two_way, factors) = if spec.wants(Grouping::ByScenario) && !exp_a.is_empty() {
        let f = vec![
            factor_analysis("intelligence", &exp_a, |s| s.intelligence().as_str().to_string(), spec.alpha),
            factor_analysis("majority", &exp_a, |s| s.majority_ratio().to_string(), spec.alpha),
        ];
        (Some(two_way_block(&exp_a, spec.alpha)), f)
    } else {
        (None, Vec::new())
    };

    let histogram = if spec.wants(Grouping::ByTopic) { topic_histogram(debates) } else { Vec::new() };
    let ratio_sweep = (spec.wants(Grouping::ByRatio) && !exp_b.is_empty()).then(|| ratio_sweep(&exp_b, &spec.ratios));

    FramingReport {
        framing,
        debates: debates.len(),
        scenarios,
        table2,
        chi_square,
        chi_square_skipped,
        two_way,
        factors,
        histogram,
        ratio_sweep,
    }
}

fn summarize_groups(groups: BTreeMap<(Experiment, String), Vec<DebateTally>>) -> Vec<Table2Row> {
    groups
        .into_iter()
        .filter_map(|((experiment, scenario_id), tallies)| {
            summarize(tallies).ok().map(|summary| Table2Row { experiment, scenario_id, summary })
        })
        .collect()
}

/// Per-scenario CR and FCR from transcripts.
pub fn table2(debates: &[&StoredDebate]) -> Vec<Table2Row> {
    let mut sorted = debates.to_vec();
    sorted.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let mut groups: BTreeMap<(Experiment, String), Vec<DebateTally>> = BTreeMap::new();
    for d in sorted {
        groups.entry((d.experiment, d.scenario_id.clone())).or_default().push(DebateTally::from(&d.transcript));
    }
    summarize_groups(groups)
}

/// The same table recomputed from summary rows only.
pub fn table2_from_summary(rows: &[SummaryRow]) -> Vec<Table2Row> {
    let mut sorted: Vec<&SummaryRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let mut groups: BTreeMap<(Experiment, String), Vec<DebateTally>> = BTreeMap::new();
    for r in sorted {
        groups.entry((r.experiment, r.scenario_id.clone())).or_default().push(DebateTally {
            outcome: Outcome { proponent_supported_turns: r.proponent_turns(), total_evaluated_turns: r.total_turns },
            early_terminated: r.early_term != 0,
        });
    }
    summarize_groups(groups)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { f64::NAN };
    (m, sd)
}

fn debate_cr(d: &StoredDebate) -> Option<f64> {
    d.transcript.outcome.cr()
}

fn factor_analysis(
    name: &str,
    debates: &[&StoredDebate],
    level_of: impl Fn(&Scenario) -> String,
    alpha: f64,
) -> Section<FactorResult> {
    let mut by_level: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for d in debates {
        if let Some(y) = debate_cr(d) {
            by_level.entry(level_of(&d.transcript.config.scenario)).or_default().push(y);
        }
    }
    if by_level.len() < 2 {
        return Section::Skipped(format!("factor {name} has {} level(s) in the data; need at least 2", by_level.len()));
    }
    let names: Vec<String> = by_level.keys().cloned().collect();
    let groups: Vec<Vec<f64>> = by_level.into_values().collect();
    let n_total: usize = groups.iter().map(Vec::len).sum();
    let levels = names
        .iter()
        .zip(&groups)
        .map(|(level, g)| {
            let (mean, sd) = mean_sd(g);
            LevelStats { level: level.clone(), n: g.len(), mean, sd }
        })
        .collect();

    let residuals: Vec<f64> = groups
        .iter()
        .flat_map(|g| {
            let m = mean_sd(g).0;
            g.iter().map(move |y| y - m)
        })
        .collect();
    let sw = Section::from_result(shapiro_wilk(&residuals, alpha));
    let levene = Section::from_result(levene_test(&groups, Center::Mean, alpha));
    let oneway = one_way_anova(&groups);
    let classic = match &oneway {
        Ok(a) => match (a.f, a.p_value) {
            (Some(f), Some(p)) => Section::Done(TestReport::new(
                "one-way ANOVA",
                f,
                DegreesOfFreedom::Two(a.df_between, a.df_within),
                p,
                alpha,
            )),
            _ => Section::Skipped("F undefined: no within-group variability".into()),
        },
        Err(e) => Section::Skipped(e.to_string()),
    };
    let welch = Section::from_result(welch_anova(&groups, alpha));

    let failed = |s: &Section<TestReport>, what: &str| match s {
        Section::Done(r) if r.reject_null => Some(format!("{what} rejected at alpha (p = {:.4})", r.p_value)),
        Section::Done(_) => None,
        Section::Skipped(why) => Some(format!("{what} unavailable ({why})")),
    };
    let reasons: Vec<String> =
        [failed(&sw, "Shapiro-Wilk normality of residuals"), failed(&levene, "Levene equal variances")]
            .into_iter()
            .flatten()
            .collect();
    let (headline, headline_reason) = if reasons.is_empty() {
        (Headline::Classic, "diagnostics passed; classic one-way ANOVA is headline".to_string())
    } else {
        (Headline::Welch, format!("Welch ANOVA is headline: {}", reasons.join("; ")))
    };

    let effect = match &oneway {
        Ok(a) => Section::from_result(partial_eta_squared(a.ss_between, a.ss_within)),
        Err(e) => Section::Skipped(e.to_string()),
    };
    let power = match &effect {
        Section::Done(e) => Section::from_result(posthoc_power_total(e.eta_p_squared, groups.len(), n_total, alpha)),
        Section::Skipped(why) => Section::Skipped(why.clone()),
    };
    let games_howell = Section::from_result(games_howell(&groups, alpha));
    Section::Done(FactorResult {
        factor: name.to_string(),
        levels,
        n_total,
        shapiro_wilk: sw,
        levene,
        classic,
        welch,
        headline,
        headline_reason,
        effect,
        power,
        games_howell,
    })
}

/// Majority × intelligence over the unequal-count, mixed-size scenarios.
fn two_way_block(debates: &[&StoredDebate], alpha: f64) -> Section<TwoWayResult> {
    let obs: Vec<Observation> = debates
        .iter()
        .filter_map(|d| {
            let s = &d.transcript.config.scenario;
            let intel = s.intelligence();
            if s.majority_side().is_none() || intel == Intelligence::Equivalent {
                return None;
            }
            debate_cr(d).map(|y| Observation::new(y, s.majority_ratio().to_string(), intel.as_str()))
        })
        .collect();
    let a: BTreeSet<&str> = obs.iter().map(|o| o.a_level.as_str()).collect();
    let b: BTreeSet<&str> = obs.iter().map(|o| o.b_level.as_str()).collect();
    if a.len() < 2 || b.len() < 2 {
        return Section::Skipped(format!(
            "majority x intelligence block incomplete: {} majority level(s), {} intelligence level(s)",
            a.len(),
            b.len()
        ));
    }
    let table = match two_way_anova(&obs, "majority", "intelligence") {
        Ok(t) => t,
        Err(e) => return Section::Skipped(e.to_string()),
    };
    let ss_err = table.row(Source::Error).ss;
    let n = obs.len();
    let effects = [Source::A, Source::B, Source::AB]
        .into_iter()
        .map(|source| {
            let row = table.row(source);
            let effect = Section::from_result(partial_eta_squared(row.ss, ss_err));
            let power = match &effect {
                Section::Done(e) => {
                    Section::from_result(posthoc_power_total(e.eta_p_squared, row.df as usize + 1, n, alpha))
                }
                Section::Skipped(why) => Section::Skipped(why.clone()),
            };
            SourceEffect { source, effect, power }
        })
        .collect();
    Section::Done(TwoWayResult { table, effects })
}

/// Buckets per-debate CR at `k / max_turns` for each (topic, scenario).
pub fn topic_histogram(debates: &[&StoredDebate]) -> Vec<HistogramCell> {
    let mut cells: BTreeMap<(Experiment, String, String), Vec<&StoredDebate>> = BTreeMap::new();
    for d in debates {
        cells.entry((d.experiment, d.topic_id.clone(), d.scenario_id.clone())).or_default().push(d);
    }
    cells
        .into_iter()
        .map(|((experiment, topic_id, scenario_id), ds)| {
            let turns = ds.iter().map(|d| d.transcript.config.max_turns).max().unwrap_or(0);
            let mut counts = vec![0u64; turns as usize + 1];
            let mut early = vec![0u64; turns as usize + 1];
            for d in ds {
                let Some(cr) = debate_cr(d) else { continue };
                let k = ((cr * turns as f64).round() as usize).min(turns as usize);
                counts[k] += 1;
                if d.transcript.early_termination.is_some() {
                    early[k] += 1;
                }
            }
            HistogramCell { experiment, topic_id, scenario_id, turns, counts, early_terminated: early }
        })
        .collect()
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, confidence: f64) -> Result<Interval> {
    if n == 0 {
        return Err(CoreError::Metric(crate::metrics::MetricError::Empty));
    }
    let z = std_normal_quantile(1.0 - (1.0 - confidence) / 2.0)?;
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(Interval { low: (center - half).max(0.0), high: (center + half).min(1.0) })
}

/// CR toward the majority side per model and ratio, mirrored directions pooled.
pub fn ratio_sweep(debates: &[&StoredDebate], expected_ratios: &[u32]) -> Section<RatioSweep> {
    let mut acc: BTreeMap<(String, u32), (u64, u64, usize)> = BTreeMap::new();
    for d in debates {
        let s = &d.transcript.config.scenario;
        let Some(majority) = s.majority_side() else { continue };
        let hi = s.proponent_count.max(s.opponent_count);
        let lo = s.proponent_count.min(s.opponent_count);
        if hi % lo != 0 {
            continue;
        }
        let o = d.transcript.outcome;
        let toward = match majority {
            Side::Proponent => o.proponent_supported_turns,
            Side::Opponent => o.total_evaluated_turns - o.proponent_supported_turns,
        };
        let e = acc.entry((d.pairing.clone(), hi / lo)).or_default();
        e.0 += toward as u64;
        e.1 += o.total_evaluated_turns as u64;
        e.2 += 1;
    }
    if acc.is_empty() {
        return Section::Skipped("no debates with an unequal head count".into());
    }
    let pairings: BTreeSet<String> = acc.keys().map(|(p, _)| p.clone()).collect();
    let mut gaps = Vec::new();
    for p in &pairings {
        for r in expected_ratios {
            if !acc.contains_key(&(p.clone(), *r)) {
                gaps.push(format!("{p}: ratio {r} missing"));
            }
        }
    }
    let mut points = Vec::with_capacity(acc.len());
    for ((pairing, ratio), (k, n, debates)) in acc {
        let ci99 = match wilson_interval(k, n, 0.99) {
            Ok(ci) => ci,
            Err(_) => {
                gaps.push(format!("{pairing}: ratio {ratio} has no evaluated turns"));
                continue;
            }
        };
        points.push(SweepPoint {
            pairing,
            ratio,
            majority_turns: k,
            total_turns: n,
            cr_majority: k as f64 / n as f64,
            ci99,
            debates,
        });
    }
    Section::Done(RatioSweep { points, gaps })
}
