//! Shapiro-Wilk normality test using Royston's approximation for the
//! coefficients and the normalizing transformation of W (algorithm AS R94).

use crate::distributions::normal_sf;
use crate::error::{Result, StatsError};
use crate::report::{DegreesOfFreedom, TestReport};
use crate::special::std_normal_quantile;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Coefficients `a_1 >= a_2 >= ...` for the lower half of the ordered
/// sample (the upper half mirrors them with opposite sign).
fn coefficients(n: usize) -> Result<Vec<f64>> {
    let half = n / 2;
    if n == 3 {
        return Ok(vec![std::f64::consts::FRAC_1_SQRT_2]);
    }
    let an25 = n as f64 + 0.25;
    let mut m = Vec::with_capacity(half);
    for i in 1..=half {
        m.push(std_normal_quantile((i as f64 - 0.375) / an25)?);
    }
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in first_scaled..half {
        a[i] = -m[i] / fac;
    }
    Ok(a)
}

/// Returns the W statistic and its p-value.
pub fn shapiro_wilk_w(sample: &[f64]) -> Result<(f64, f64)> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(StatsError::InsufficientData(format!("Shapiro-Wilk needs 3 <= n <= 5000, got {n}")));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite("sample"));
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let range = x[n - 1] - x[0];
    if range <= 1e-19 * x[n - 1].abs().max(1.0) {
        return Err(StatsError::Degenerate("sample has zero variance".into()));
    }
    let a = coefficients(n)?;
    // scale by the range before accumulating; W is affine invariant
    let scaled: Vec<f64> = x.iter().map(|v| (v - x[0]) / range).collect();
    let mean = scaled.iter().sum::<f64>() / n as f64;
    let ss: f64 = scaled.iter().map(|v| (v - mean) * (v - mean)).sum();
    let mut linear = 0.0;
    for (i, ai) in a.iter().enumerate() {
        linear += ai * (scaled[n - 1 - i] - scaled[i]);
    }
    let w = (linear * linear / ss).min(1.0);

    let p = if n == 3 {
        let six_over_pi = 6.0 / std::f64::consts::PI;
        let pi_over_3 = std::f64::consts::FRAC_PI_3;
        (six_over_pi * (w.sqrt().asin() - pi_over_3)).max(0.0)
    } else {
        let w1 = 1.0 - w;
        if w1 <= 0.0 {
            1.0
        } else {
            let mut y = w1.ln();
            let an = n as f64;
            let (m, s) = if n <= 11 {
                let gamma = poly(&G, an);
                if y >= gamma {
                    return Ok((w, 1e-99));
                }
                y = -(gamma - y).ln();
                (poly(&C3, an), poly(&C4, an).exp())
            } else {
                let xx = an.ln();
                (poly(&C5, xx), poly(&C6, xx).exp())
            };
            normal_sf((y - m) / s)?.value
        }
    };
    Ok((w, p.clamp(0.0, 1.0)))
}

pub fn shapiro_wilk(sample: &[f64], alpha: f64) -> Result<TestReport> {
    let (w, p) = shapiro_wilk_w(sample)?;
    Ok(TestReport::new("Shapiro-Wilk", w, DegreesOfFreedom::One(sample.len() as f64), p, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_is_degenerate() {
        assert!(matches!(shapiro_wilk_w(&[1.0, 1.0, 1.0, 1.0, 1.0]), Err(StatsError::Degenerate(_))));
    }

    #[test]
    fn size_limits() {
        assert!(shapiro_wilk_w(&[1.0, 2.0]).is_err());
        assert!(shapiro_wilk_w(&vec![0.5; 5001]).is_err());
    }

    #[test]
    fn coefficients_are_unit_norm() {
        for n in [4, 5, 6, 11, 12, 50, 500] {
            let a = coefficients(n).unwrap();
            let norm: f64 = 2.0 * a.iter().map(|v| v * v).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-12, "n={n} norm={norm}");
        }
    }

    #[test]
    fn three_points_equally_spaced() {
        // W = 1 for an equally spaced triple
        let (w, p) = shapiro_wilk_w(&[1.0, 2.0, 3.0]).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        assert!((p - 1.0).abs() < 1e-9);
    }
}
