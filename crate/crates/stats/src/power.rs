//! Post hoc power of the one-way F test from an observed effect size.

use crate::distributions::{f_critical, noncentral_f_sf};
use crate::error::{Result, StatsError};

/// Power with `k` groups of `n` observations each.
pub fn posthoc_power_anova(eta_p_squared: f64, k: usize, n_per_group: usize, alpha: f64) -> Result<f64> {
    if n_per_group < 2 {
        return Err(StatsError::InvalidParameter {
            name: "n",
            value: n_per_group as f64,
            reason: "need at least two observations per group",
        });
    }
    posthoc_power_total(eta_p_squared, k, k * n_per_group, alpha)
}

/// Power for `total_n` observations spread over `k` groups:
/// `lambda = N * eta / (1 - eta)`, power = P(F' > F_crit(alpha) | lambda).
pub fn posthoc_power_total(eta_p_squared: f64, k: usize, total_n: usize, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta_p_squared) {
        return Err(StatsError::InvalidParameter {
            name: "eta_p_squared",
            value: eta_p_squared,
            reason: "must lie in [0, 1)",
        });
    }
    if k < 2 {
        return Err(StatsError::InvalidParameter { name: "k", value: k as f64, reason: "need at least two groups" });
    }
    if total_n <= k {
        return Err(StatsError::InsufficientData("no error degrees of freedom".into()));
    }
    let df1 = (k - 1) as f64;
    let df2 = (total_n - k) as f64;
    let lambda = total_n as f64 * eta_p_squared / (1.0 - eta_p_squared);
    let critical = f_critical(alpha, df1, df2)?;
    Ok(noncentral_f_sf(critical, df1, df2, lambda)?.value)
}
