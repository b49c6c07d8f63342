//! Welch's heteroscedastic one-way ANOVA and the two-sample Welch t-test.

use crate::distributions::{f_sf, t_sf};
use crate::error::{Result, StatsError};
use crate::report::{mean, variance, DegreesOfFreedom, TestReport};

pub(crate) fn check_groups(groups: &[Vec<f64>]) -> Result<()> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientData("need at least two groups".into()));
    }
    for (i, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(StatsError::InsufficientData(format!(
                "group {i} has {} observation(s); need at least 2",
                g.len()
            )));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFinite("groups"));
        }
        if variance(g) <= 0.0 {
            return Err(StatsError::Degenerate(format!("group {i} has zero variance")));
        }
    }
    Ok(())
}

/// Welch F with weights `n_j / s_j^2` and fractional denominator df.
pub fn welch_anova(groups: &[Vec<f64>], alpha: f64) -> Result<TestReport> {
    check_groups(groups)?;
    let k = groups.len() as f64;
    let stats: Vec<(f64, f64, f64)> = groups
        .iter()
        .map(|g| {
            let n = g.len() as f64;
            (n / variance(g), mean(g), n)
        })
        .collect();
    let total_weight: f64 = stats.iter().map(|s| s.0).sum();
    let weighted_mean = stats.iter().map(|s| s.0 * s.1).sum::<f64>() / total_weight;
    let between = stats.iter().map(|(w, m, _)| w * (m - weighted_mean).powi(2)).sum::<f64>() / (k - 1.0);
    let lambda: f64 = stats.iter().map(|(w, _, n)| (1.0 - w / total_weight).powi(2) / (n - 1.0)).sum();
    let denominator = 1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * lambda;
    let f = between / denominator;
    let df1 = k - 1.0;
    let df2 = (k * k - 1.0) / (3.0 * lambda);
    let p = f_sf(f, df1, df2)?.value;
    Ok(TestReport::new("Welch ANOVA", f, DegreesOfFreedom::Two(df1, df2), p, alpha))
}

/// Two-sided Welch t-test.
pub fn welch_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TestReport> {
    check_groups(&[a.to_vec(), b.to_vec()])?;
    let (va, vb) = (variance(a) / a.len() as f64, variance(b) / b.len() as f64);
    let se = (va + vb).sqrt();
    let t = (mean(a) - mean(b)) / se;
    let df = (va + vb).powi(2) / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let p = 2.0 * t_sf(t.abs(), df)?.value;
    Ok(TestReport::new("Welch t-test", t, DegreesOfFreedom::One(df), p, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_group_example() {
        let groups = vec![vec![1.0, 2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0, 6.0], vec![5.0, 6.0, 7.0, 8.0]];
        let r = welch_anova(&groups, 0.01).unwrap();
        assert!((r.statistic - 8.64).abs() < 1e-9);
        match r.df {
            DegreesOfFreedom::Two(df1, df2) => {
                assert_eq!(df1, 2.0);
                assert!((df2 - 6.0).abs() < 1e-9);
            }
            other => panic!("unexpected df {other:?}"),
        }
    }

    #[test]
    fn zero_variance_is_rejected() {
        assert!(welch_anova(&[vec![1.0, 1.0], vec![1.0, 2.0]], 0.01).is_err());
    }
}
