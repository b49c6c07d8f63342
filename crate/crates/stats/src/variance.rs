//! Levene's test for equality of variances.

use serde::{Deserialize, Serialize};

use crate::anova::one_way_anova;
use crate::error::{Result, StatsError};
use crate::report::{mean, DegreesOfFreedom, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Center {
    /// Classic Levene test.
    #[default]
    Mean,
    /// Brown-Forsythe variant.
    Median,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One-way ANOVA on absolute deviations from each group's center.
pub fn levene_test(groups: &[Vec<f64>], center: Center, alpha: f64) -> Result<TestReport> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientData("Levene needs at least two groups".into()));
    }
    if let Some((i, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < 2) {
        return Err(StatsError::InsufficientData(format!(
            "group {i} has {} observation(s); Levene needs at least 2",
            g.len()
        )));
    }
    if groups.iter().flatten().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite("groups"));
    }
    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let c = match center {
                Center::Mean => mean(g),
                Center::Median => median(g),
            };
            g.iter().map(|x| (x - c).abs()).collect()
        })
        .collect();
    let anova = one_way_anova(&deviations)?;
    let (statistic, p) = match (anova.f, anova.p_value) {
        (Some(f), Some(p)) => (f, p),
        // all deviations equal within groups: no evidence against equal spread
        _ if anova.ss_between == 0.0 => (0.0, 1.0),
        _ => (f64::INFINITY, 0.0),
    };
    let name = match center {
        Center::Mean => "Levene (mean)",
        Center::Median => "Levene (median)",
    };
    Ok(TestReport::new(name, statistic, DegreesOfFreedom::Two(anova.df_between, anova.df_within), p, alpha))
}
