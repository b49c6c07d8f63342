//! Games-Howell pairwise comparisons.

use serde::{Deserialize, Serialize};

use crate::distributions::studentized_range_sf;
use crate::error::Result;
use crate::report::{mean, variance, DegreesOfFreedom, TestReport};
use crate::welch::check_groups;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub first: usize,
    pub second: usize,
    pub mean_difference: f64,
    pub standard_error: f64,
    pub report: TestReport,
}

/// For every pair `(i, j)` with `i < j`: Welch standard error and df, the
/// statistic `q = |mean_i - mean_j| / SE * sqrt(2)` and its p-value from the
/// studentized range with `k` = number of groups.
pub fn games_howell(groups: &[Vec<f64>], alpha: f64) -> Result<Vec<PairwiseComparison>> {
    check_groups(groups)?;
    let k = groups.len();
    let summary: Vec<(f64, f64)> = groups.iter().map(|g| (mean(g), variance(g) / g.len() as f64)).collect();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let (mi, vi) = summary[i];
            let (mj, vj) = summary[j];
            let se = (vi + vj).sqrt();
            let df = (vi + vj).powi(2)
                / (vi * vi / (groups[i].len() as f64 - 1.0) + vj * vj / (groups[j].len() as f64 - 1.0));
            let diff = mi - mj;
            let q = diff.abs() / se * std::f64::consts::SQRT_2;
            let p = studentized_range_sf(q, k, df)?.value;
            out.push(PairwiseComparison {
                first: i,
                second: j,
                mean_difference: diff,
                standard_error: se,
                report: TestReport::new(format!("Games-Howell {i} vs {j}"), q, DegreesOfFreedom::One(df), p, alpha),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups_have_unit_p() {
        let g = vec![1.0, 2.0, 4.0, 7.0];
        let out = games_howell(&[g.clone(), g.clone(), g], 0.01).unwrap();
        assert_eq!(out.len(), 3);
        for c in out {
            assert_eq!(c.report.statistic, 0.0);
            assert!((c.report.p_value - 1.0).abs() < 1e-12);
        }
    }
}
