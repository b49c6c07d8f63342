//! The six distribution kernels used by the hypothesis tests.
//!
//! Each kernel returns a [`DistributionResult`] carrying the value together
//! with an absolute error bound. Closed-form kernels (normal, chi-square, t,
//! F) inherit the precision of the incomplete gamma/beta evaluations; the
//! noncentral F bound is the Poisson mass left out of the truncated series;
//! the studentized range bound is the difference between successive panel
//! refinements of the outer integral.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_positive, Result, StatsError};
use crate::quadrature;
use crate::special::{self, beta_inc, gamma_inc, ln_gamma, std_normal_cdf_fast};

/// Error bound reported for kernels evaluated through the incomplete gamma
/// and beta functions.
const CLOSED_FORM_BOUND: f64 = 1e-13;

/// Poisson tail mass at which the noncentral F series is truncated.
const POISSON_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionResult {
    pub value: f64,
    pub abs_error_bound: f64,
}

impl DistributionResult {
    fn closed_form(value: f64) -> Self {
        Self { value: value.clamp(0.0, 1.0), abs_error_bound: CLOSED_FORM_BOUND }
    }

    /// `1 - value`, keeping the bound.
    pub fn complement(self) -> Self {
        Self { value: (1.0 - self.value).clamp(0.0, 1.0), abs_error_bound: self.abs_error_bound }
    }
}

pub fn normal_cdf(x: f64) -> Result<DistributionResult> {
    if x.is_nan() {
        return Err(StatsError::NonFinite("x"));
    }
    Ok(DistributionResult::closed_form(special::std_normal_cdf(x)))
}

pub fn normal_sf(x: f64) -> Result<DistributionResult> {
    if x.is_nan() {
        return Err(StatsError::NonFinite("x"));
    }
    Ok(DistributionResult::closed_form(special::std_normal_sf(x)))
}

/// Upper tail of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chi2_sf(x: f64, df: f64) -> Result<DistributionResult> {
    check_finite("x", x)?;
    check_positive("df", df)?;
    if x <= 0.0 {
        return Ok(DistributionResult::closed_form(1.0));
    }
    let (_, q) = gamma_inc(0.5 * df, 0.5 * x)?;
    Ok(DistributionResult::closed_form(q))
}

pub fn chi2_cdf(x: f64, df: f64) -> Result<DistributionResult> {
    check_finite("x", x)?;
    check_positive("df", df)?;
    if x <= 0.0 {
        return Ok(DistributionResult::closed_form(0.0));
    }
    let (p, _) = gamma_inc(0.5 * df, 0.5 * x)?;
    Ok(DistributionResult::closed_form(p))
}

/// Upper tail of Student's t.
pub fn t_sf(x: f64, df: f64) -> Result<DistributionResult> {
    check_finite("x", x)?;
    check_positive("df", df)?;
    if x == 0.0 {
        return Ok(DistributionResult::closed_form(0.5));
    }
    let y = df / (df + x * x);
    let (tail, _) = beta_inc(0.5 * df, 0.5, y)?;
    let one_sided = 0.5 * tail;
    let value = if x > 0.0 { one_sided } else { 1.0 - one_sided };
    Ok(DistributionResult::closed_form(value))
}

/// Upper tail of the F distribution.
pub fn f_sf(x: f64, df1: f64, df2: f64) -> Result<DistributionResult> {
    Ok(f_tails(x, df1, df2)?.1)
}

pub fn f_cdf(x: f64, df1: f64, df2: f64) -> Result<DistributionResult> {
    Ok(f_tails(x, df1, df2)?.0)
}

fn f_tails(x: f64, df1: f64, df2: f64) -> Result<(DistributionResult, DistributionResult)> {
    check_finite("x", x)?;
    check_positive("df1", df1)?;
    check_positive("df2", df2)?;
    if x <= 0.0 {
        return Ok((DistributionResult::closed_form(0.0), DistributionResult::closed_form(1.0)));
    }
    let y = df2 / (df2 + df1 * x);
    let (sf, cdf) = beta_inc(0.5 * df2, 0.5 * df1, y)?;
    Ok((DistributionResult::closed_form(cdf), DistributionResult::closed_form(sf)))
}

/// CDF of the noncentral F distribution with noncentrality `lambda`, as a
/// Poisson(lambda/2) mixture of incomplete beta terms summed outward from
/// the Poisson mode.
pub fn noncentral_f_cdf(x: f64, df1: f64, df2: f64, lambda: f64) -> Result<DistributionResult> {
    check_finite("x", x)?;
    check_positive("df1", df1)?;
    check_positive("df2", df2)?;
    check_finite("lambda", lambda)?;
    if lambda < 0.0 {
        return Err(StatsError::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "noncentrality must be non-negative",
        });
    }
    if lambda == 0.0 {
        return f_cdf(x, df1, df2);
    }
    if x <= 0.0 {
        return Ok(DistributionResult::closed_form(0.0));
    }
    let y = df1 * x / (df1 * x + df2);
    let half = 0.5 * lambda;
    let ln_half = half.ln();
    let weight = |j: f64| (-half + j * ln_half - ln_gamma(j + 1.0)).exp();
    let term = |j: f64| -> Result<f64> { Ok(beta_inc(0.5 * df1 + j, 0.5 * df2, y)?.0) };

    let mode = half.floor();
    let mut sum = 0.0;
    let mut mass = 0.0;

    let mut j = mode;
    loop {
        let w = weight(j);
        sum += w * term(j)?;
        mass += w;
        if j == 0.0 || w < 1e-18 {
            break;
        }
        j -= 1.0;
    }

    let mut j = mode + 1.0;
    let cap = mode + 50.0 * half.sqrt() + 1_000.0;
    while 1.0 - mass >= POISSON_TAIL {
        let w = weight(j);
        sum += w * term(j)?;
        mass += w;
        if w < 1e-18 && j > half {
            break;
        }
        j += 1.0;
        if j > cap {
            return Err(StatsError::NumericalFailure { routine: "noncentral F series", residual: 1.0 - mass });
        }
    }
    Ok(DistributionResult { value: sum.clamp(0.0, 1.0), abs_error_bound: (1.0 - mass).max(0.0) + 1e-14 })
}

pub fn noncentral_f_sf(x: f64, df1: f64, df2: f64, lambda: f64) -> Result<DistributionResult> {
    Ok(noncentral_f_cdf(x, df1, df2, lambda)?.complement())
}

/// Nodes for the inner integral over the minimum of k standard normals.
struct RangeGrid {
    z: Vec<f64>,
    weighted_pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl RangeGrid {
    const HALF_WIDTH: f64 = 9.0;
    const PANELS: usize = 36;

    fn get() -> &'static RangeGrid {
        static GRID: std::sync::OnceLock<RangeGrid> = std::sync::OnceLock::new();
        GRID.get_or_init(|| {
            let rule = quadrature::rule();
            let a = -Self::HALF_WIDTH;
            let width = 2.0 * Self::HALF_WIDTH / Self::PANELS as f64;
            let half = 0.5 * width;
            let mut z = Vec::new();
            let mut weighted_pdf = Vec::new();
            let mut cdf = Vec::new();
            for p in 0..Self::PANELS {
                let mid = a + (p as f64 + 0.5) * width;
                for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
                    let node = mid + half * x;
                    z.push(node);
                    weighted_pdf.push(w * half * special::std_normal_pdf(node));
                    cdf.push(std_normal_cdf_fast(node));
                }
            }
            RangeGrid { z, weighted_pdf, cdf }
        })
    }

    /// P(range of k standard normals <= w).
    fn range_cdf(&self, w: f64, k: usize) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let power = (k - 1) as i32;
        let mut total = 0.0;
        for ((z, wp), c) in self.z.iter().zip(&self.weighted_pdf).zip(&self.cdf) {
            let inside = std_normal_cdf_fast(z + w) - c;
            if inside > 0.0 {
                total += wp * inside.powi(power);
            }
        }
        (k as f64 * total).clamp(0.0, 1.0)
    }
}

fn check_range_args(q: f64, k: usize, df: f64) -> Result<()> {
    check_finite("q", q)?;
    if k < 2 {
        return Err(StatsError::InvalidParameter { name: "k", value: k as f64, reason: "need at least two groups" });
    }
    if df.is_nan() {
        return Err(StatsError::NonFinite("df"));
    }
    if df <= 0.0 {
        return Err(StatsError::InvalidParameter { name: "df", value: df, reason: "must be positive" });
    }
    Ok(())
}

/// CDF of the studentized range `Q = range(Z_1..Z_k) / S`, where
/// `S^2 ~ chi2(df) / df` independent of the normals. `df` may be infinite.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> Result<DistributionResult> {
    check_range_args(q, k, df)?;
    let grid = RangeGrid::get();
    if q <= 0.0 {
        return Ok(DistributionResult { value: 0.0, abs_error_bound: 0.0 });
    }
    if df.is_infinite() {
        return Ok(DistributionResult { value: grid.range_cdf(q, k), abs_error_bound: 1e-13 });
    }

    // density of S = sqrt(V / df), V ~ chi2(df)
    let half_df = 0.5 * df;
    let log_norm = half_df * df.ln() - ln_gamma(half_df) - (half_df - 1.0) * 2f64.ln();
    let log_density = |s: f64| log_norm + (df - 1.0) * s.ln() - half_df * s * s;

    let mode = if df > 1.0 { ((df - 1.0) / df).sqrt() } else { 0.0 };
    let peak = if mode > 0.0 { log_density(mode) } else { log_density(0.5).max(log_density(1.0)) };
    let cutoff = peak - 50.0;
    let upper = {
        let start = mode.max(0.5);
        let mut hi = start.max(1.0);
        while log_density(hi) > cutoff {
            hi *= 2.0;
        }
        bisect(|s| cutoff - log_density(s), start, hi)
    };
    let tiny = 1e-12 * mode;
    let lower =
        if mode > 0.0 && log_density(tiny) < cutoff { bisect(|s| log_density(s) - cutoff, tiny, mode) } else { 0.0 };

    let integrand = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            log_density(s).exp() * grid.range_cdf(q * s, k)
        }
    };

    let mut panels = 8;
    let mut previous = quadrature::integrate(integrand, lower, upper, panels);
    loop {
        panels *= 2;
        let current = quadrature::integrate(integrand, lower, upper, panels);
        let diff = (current - previous).abs();
        if diff <= 1e-11 {
            return Ok(DistributionResult { value: current.clamp(0.0, 1.0), abs_error_bound: diff.max(1e-12) });
        }
        if panels >= 4096 {
            if diff <= 1e-8 {
                return Ok(DistributionResult { value: current.clamp(0.0, 1.0), abs_error_bound: diff });
            }
            return Err(StatsError::NumericalFailure { routine: "studentized range outer integral", residual: diff });
        }
        previous = current;
    }
}

pub fn studentized_range_sf(q: f64, k: usize, df: f64) -> Result<DistributionResult> {
    Ok(studentized_range_cdf(q, k, df)?.complement())
}

/// Upper-`alpha` critical value of the studentized range.
pub fn studentized_range_critical(alpha: f64, k: usize, df: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_range_args(1.0, k, df)?;
    let mut hi = 4.0;
    let mut sf_hi = studentized_range_sf(hi, k, df)?.value;
    while sf_hi > alpha {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(StatsError::NumericalFailure {
                routine: "studentized range quantile bracket",
                residual: sf_hi - alpha,
            });
        }
        sf_hi = studentized_range_sf(hi, k, df)?.value;
    }
    solve_decreasing(|q| Ok(studentized_range_sf(q, k, df)?.value), alpha, 0.0, hi)
}

/// Upper-`alpha` critical value of the central F distribution.
pub fn f_critical(alpha: f64, df1: f64, df2: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut hi = 4.0;
    while f_sf(hi, df1, df2)?.value > alpha {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(StatsError::NumericalFailure { routine: "F quantile bracket", residual: hi });
        }
    }
    solve_decreasing(|x| Ok(f_sf(x, df1, df2)?.value), alpha, 0.0, hi)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidParameter { name: "alpha", value: alpha, reason: "must lie in (0, 1)" });
    }
    Ok(())
}

/// Bisection for `f(x) = target` with `f` decreasing on `[lo, hi]`.
fn solve_decreasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-11 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of an increasing function on `[lo, hi]`.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}
