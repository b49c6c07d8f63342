//! One-way and balanced two-way fixed-effects ANOVA.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::f_sf;
use crate::error::{Result, StatsError};
use crate::report::mean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneWayAnova {
    pub ss_between: f64,
    pub ss_within: f64,
    pub df_between: f64,
    pub df_within: f64,
    /// `None` when the within-group variability is zero.
    pub f: Option<f64>,
    pub p_value: Option<f64>,
}

pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<OneWayAnova> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientData("need at least two groups".into()));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(StatsError::InsufficientData("empty group".into()));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_within += g.iter().map(|y| (y - m) * (y - m)).sum::<f64>();
    }
    let df_between = (groups.len() - 1) as f64;
    let df_within = (n - groups.len()) as f64;
    if df_within <= 0.0 {
        return Err(StatsError::InsufficientData("no within-group degrees of freedom".into()));
    }
    let (f, p_value) = if ss_within > 0.0 {
        let f = (ss_between / df_between) / (ss_within / df_within);
        (Some(f), Some(f_sf(f, df_between, df_within)?.value))
    } else {
        (None, None)
    };
    Ok(OneWayAnova { ss_between, ss_within, df_between, df_within, f, p_value })
}

/// One response with its level for each of the two factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub a_level: String,
    pub b_level: String,
}

impl Observation {
    pub fn new(y: f64, a_level: impl Into<String>, b_level: impl Into<String>) -> Self {
        Self { y, a_level: a_level.into(), b_level: b_level.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    A,
    B,
    AB,
    Error,
    Total,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: Source,
    pub ss: f64,
    pub df: f64,
    pub ms: Option<f64>,
    pub f: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub factor_a: String,
    pub factor_b: String,
    pub a_levels: Vec<String>,
    pub b_levels: Vec<String>,
    pub reps_per_cell: usize,
    pub rows: Vec<AnovaRow>,
    /// Set when the error sum of squares is zero, leaving every F undefined.
    pub degenerate: bool,
}

impl AnovaTable {
    pub fn row(&self, source: Source) -> &AnovaRow {
        self.rows.iter().find(|r| r.source == source).expect("every source is present")
    }
}

/// Balanced two-way ANOVA with interaction. Levels are ordered
/// lexicographically.
pub fn two_way_anova(observations: &[Observation], factor_a: &str, factor_b: &str) -> Result<AnovaTable> {
    if observations.iter().any(|o| !o.y.is_finite()) {
        return Err(StatsError::NonFinite("y"));
    }
    let mut cells: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    let mut a_levels: Vec<&str> = observations.iter().map(|o| o.a_level.as_str()).collect();
    let mut b_levels: Vec<&str> = observations.iter().map(|o| o.b_level.as_str()).collect();
    a_levels.sort_unstable();
    a_levels.dedup();
    b_levels.sort_unstable();
    b_levels.dedup();
    if a_levels.len() < 2 || b_levels.len() < 2 {
        return Err(StatsError::InsufficientData("each factor needs at least two levels".into()));
    }
    for o in observations {
        cells.entry((&o.a_level, &o.b_level)).or_default().push(o.y);
    }
    for a in &a_levels {
        for b in &b_levels {
            if !cells.contains_key(&(*a, *b)) {
                return Err(StatsError::InsufficientData(format!("empty cell ({a}, {b})")));
            }
        }
    }
    let reps = cells.values().next().map(Vec::len).unwrap_or(0);
    if cells.values().any(|c| c.len() != reps) {
        return Err(StatsError::Unbalanced("cells have unequal replicate counts".into()));
    }
    let (na, nb) = (a_levels.len(), b_levels.len());
    let n = observations.len();
    let df_error = (n - na * nb) as f64;
    if df_error <= 0.0 {
        return Err(StatsError::InsufficientData("zero error degrees of freedom".into()));
    }

    let grand = observations.iter().map(|o| o.y).sum::<f64>() / n as f64;
    let cell_mean = |a: &str, b: &str| mean(&cells[&(a, b)]);
    let a_means: Vec<f64> =
        a_levels.iter().map(|a| b_levels.iter().map(|b| cell_mean(a, b)).sum::<f64>() / nb as f64).collect();
    let b_means: Vec<f64> =
        b_levels.iter().map(|b| a_levels.iter().map(|a| cell_mean(a, b)).sum::<f64>() / na as f64).collect();

    let r = reps as f64;
    let ss_a = nb as f64 * r * a_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = na as f64 * r * b_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_ab = 0.0;
    let mut ss_error = 0.0;
    for (i, a) in a_levels.iter().enumerate() {
        for (j, b) in b_levels.iter().enumerate() {
            let cm = cell_mean(a, b);
            ss_ab += r * (cm - a_means[i] - b_means[j] + grand).powi(2);
            ss_error += cells[&(*a, *b)].iter().map(|y| (y - cm).powi(2)).sum::<f64>();
        }
    }
    let ss_total: f64 = observations.iter().map(|o| (o.y - grand).powi(2)).sum();

    let ms_error = ss_error / df_error;
    let magnitude: f64 = observations.iter().map(|o| o.y * o.y).sum();
    let degenerate = ss_error <= 1e-12 * ss_total || ss_error <= 1e-24 * magnitude;
    let effect_row = |source, ss: f64, df: f64| -> Result<AnovaRow> {
        let ms = ss / df;
        let (f, p) = if degenerate {
            (None, None)
        } else {
            let f = ms / ms_error;
            (Some(f), Some(f_sf(f, df, df_error)?.value))
        };
        Ok(AnovaRow { source, ss, df, ms: Some(ms), f, p_value: p })
    };
    let rows = vec![
        effect_row(Source::A, ss_a, (na - 1) as f64)?,
        effect_row(Source::B, ss_b, (nb - 1) as f64)?,
        effect_row(Source::AB, ss_ab, ((na - 1) * (nb - 1)) as f64)?,
        AnovaRow { source: Source::Error, ss: ss_error, df: df_error, ms: Some(ms_error), f: None, p_value: None },
        AnovaRow { source: Source::Total, ss: ss_total, df: (n - 1) as f64, ms: None, f: None, p_value: None },
    ];
    Ok(AnovaTable {
        factor_a: factor_a.to_string(),
        factor_b: factor_b.to_string(),
        a_levels: a_levels.iter().map(|s| s.to_string()).collect(),
        b_levels: b_levels.iter().map(|s| s.to_string()).collect(),
        reps_per_cell: reps,
        rows,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cell_is_rejected() {
        let obs = vec![
            Observation::new(1.0, "a1", "b1"),
            Observation::new(2.0, "a1", "b1"),
            Observation::new(1.0, "a2", "b2"),
            Observation::new(2.0, "a2", "b2"),
        ];
        assert!(matches!(two_way_anova(&obs, "A", "B"), Err(StatsError::InsufficientData(_))));
    }

    #[test]
    fn unbalanced_is_rejected() {
        let mut obs = Vec::new();
        for (a, b) in [("a1", "b1"), ("a1", "b2"), ("a2", "b1"), ("a2", "b2")] {
            obs.push(Observation::new(1.0, a, b));
            obs.push(Observation::new(2.0, a, b));
        }
        obs.push(Observation::new(3.0, "a1", "b1"));
        assert!(matches!(two_way_anova(&obs, "A", "B"), Err(StatsError::Unbalanced(_))));
    }

    #[test]
    fn single_replicate_has_no_error_df() {
        let obs = vec![
            Observation::new(1.0, "a1", "b1"),
            Observation::new(2.0, "a1", "b2"),
            Observation::new(3.0, "a2", "b1"),
            Observation::new(4.0, "a2", "b2"),
        ];
        assert!(two_way_anova(&obs, "A", "B").is_err());
    }

    #[test]
    fn one_way_matches_hand_computation() {
        let r = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((r.ss_between - 13.5).abs() < 1e-12);
        assert!((r.ss_within - 4.0).abs() < 1e-12);
        assert!((r.f.unwrap() - 13.5).abs() < 1e-12);
    }
}
