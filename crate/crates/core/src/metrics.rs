//! Conformity rate (micro and macro), full conformity ratio and turn-level
//! contingency tables.

use conformity_stats::ContingencyTable2x2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DebateTranscript, Outcome, Side};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("metric undefined for an empty set of debates")]
    Empty,
    #[error("group `{0}` has no evaluated turns")]
    EmptyGroup(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformitySummary {
    pub cr_micro: f64,
    pub cr_macro: f64,
    pub fcr: f64,
    pub proponent_supported_turns: u64,
    pub total_evaluated_turns: u64,
    pub fully_proponent_discussions: u64,
    pub total_discussions: u64,
    /// Debates dropped for having no evaluated turn.
    pub excluded: u64,
    /// Included debates that ended on a concession.
    pub early_terminated: u64,
}

/// Per-debate record sufficient for every aggregate metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebateTally {
    pub outcome: Outcome,
    pub early_terminated: bool,
}

impl From<&DebateTranscript> for DebateTally {
    fn from(t: &DebateTranscript) -> Self {
        DebateTally { outcome: t.outcome, early_terminated: t.early_termination.is_some() }
    }
}

/// CR and FCR over debates, with evaluated turns as the denominator.
pub fn summarize<I>(tallies: I) -> Result<ConformitySummary, MetricError>
where
    I: IntoIterator<Item = DebateTally>,
{
    let mut s = ConformitySummary {
        cr_micro: 0.0,
        cr_macro: 0.0,
        fcr: 0.0,
        proponent_supported_turns: 0,
        total_evaluated_turns: 0,
        fully_proponent_discussions: 0,
        total_discussions: 0,
        excluded: 0,
        early_terminated: 0,
    };
    let mut macro_sum = 0.0;
    let mut seen = 0u64;
    for t in tallies {
        seen += 1;
        let Some(cr) = t.outcome.cr() else {
            s.excluded += 1;
            continue;
        };
        s.total_discussions += 1;
        s.proponent_supported_turns += t.outcome.proponent_supported_turns as u64;
        s.total_evaluated_turns += t.outcome.total_evaluated_turns as u64;
        s.fully_proponent_discussions += t.outcome.fully_proponent() as u64;
        s.early_terminated += t.early_terminated as u64;
        macro_sum += cr;
    }
    if seen == 0 || s.total_discussions == 0 {
        return Err(MetricError::Empty);
    }
    if s.excluded > 0 {
        log::warn!("{} debates without evaluated turns excluded from conformity metrics", s.excluded);
    }
    let n = s.total_discussions as f64;
    s.cr_micro = s.proponent_supported_turns as f64 / s.total_evaluated_turns as f64;
    s.cr_macro = macro_sum / n;
    s.fcr = s.fully_proponent_discussions as f64 / n;
    Ok(s)
}

pub fn conformity_rate(transcripts: &[DebateTranscript]) -> Result<ConformitySummary, MetricError> {
    summarize(transcripts.iter().map(DebateTally::from))
}

/// Same summary; FCR counts debates whose every evaluated turn went to the proponent.
pub fn full_conformity_ratio(transcripts: &[DebateTranscript]) -> Result<ConformitySummary, MetricError> {
    conformity_rate(transcripts)
}

/// Turn counts (proponent, opponent) over a group.
pub fn side_counts<'a, I>(tallies: I) -> [u64; 2]
where
    I: IntoIterator<Item = &'a Outcome>,
{
    tallies.into_iter().fold([0, 0], |[p, o], t| {
        let pro = t.proponent_supported_turns as u64;
        [p + pro, o + t.total_evaluated_turns as u64 - pro]
    })
}

/// Rows are groups, columns are (proponent, opponent) verdict counts.
pub fn build_contingency(
    group_a: &[Outcome],
    group_b: &[Outcome],
    labels: [&str; 2],
) -> Result<ContingencyTable2x2, MetricError> {
    let a = side_counts(group_a);
    let b = side_counts(group_b);
    for (counts, label) in [(a, labels[0]), (b, labels[1])] {
        if counts[0] + counts[1] == 0 {
            return Err(MetricError::EmptyGroup(label.to_string()));
        }
    }
    Ok(ContingencyTable2x2::new([a, b]).with_labels(labels, [Side::Proponent.as_str(), Side::Opponent.as_str()]))
}

pub fn build_contingency_from_transcripts(
    group_a: &[DebateTranscript],
    group_b: &[DebateTranscript],
    labels: [&str; 2],
) -> Result<ContingencyTable2x2, MetricError> {
    let a: Vec<Outcome> = group_a.iter().map(|t| t.outcome).collect();
    let b: Vec<Outcome> = group_b.iter().map(|t| t.outcome).collect();
    build_contingency(&a, &b, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally(pattern: &str) -> DebateTally {
        let pro = pattern.chars().filter(|&c| c == 'P').count() as u32;
        DebateTally {
            outcome: Outcome { proponent_supported_turns: pro, total_evaluated_turns: pattern.len() as u32 },
            early_terminated: pattern.len() < 3,
        }
    }

    #[test]
    fn micro_macro_fcr() {
        let s = summarize(["PPP", "POO", "OOO"].map(tally)).unwrap();
        assert!((s.cr_micro - 4.0 / 9.0).abs() < 1e-12);
        assert!((s.cr_macro - (1.0 + 1.0 / 3.0) / 3.0).abs() < 1e-12);
        assert!((s.fcr - 1.0 / 3.0).abs() < 1e-12);
        let all = summarize(["PPP", "PPP"].map(tally)).unwrap();
        assert_eq!((all.cr_micro, all.fcr), (1.0, 1.0));
    }

    #[test]
    fn early_terminated_use_evaluated_turns() {
        let s = summarize(["PP", "OOO"].map(tally)).unwrap();
        assert_eq!(s.total_evaluated_turns, 5);
        assert!((s.cr_micro - 0.4).abs() < 1e-12);
        assert_eq!(s.fully_proponent_discussions, 1);
        assert_eq!(s.early_terminated, 1);
    }

    #[test]
    fn empty_and_excluded() {
        assert_eq!(summarize(Vec::new()), Err(MetricError::Empty));
        let s = summarize(["", "PPO"].map(tally)).unwrap();
        assert_eq!((s.excluded, s.total_discussions), (1, 1));
    }

    #[test]
    fn contingency_extremes_and_margins() {
        let a: Vec<Outcome> = (0..10).map(|_| tally("PPP").outcome).collect();
        let b: Vec<Outcome> = (0..10).map(|_| tally("OOO").outcome).collect();
        let t = build_contingency(&a, &b, ["A", "B"]).unwrap();
        assert_eq!(t.observed, [[30, 0], [0, 30]]);
        assert_eq!(build_contingency(&[], &b, ["A", "B"]), Err(MetricError::EmptyGroup("A".into())));
    }
}
