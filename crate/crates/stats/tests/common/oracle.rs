//! Brute-force reference values for the distribution kernels, computed by
//! adaptive Simpson quadrature of the textbook densities. Shares no code
//! with the library's incomplete gamma/beta or Gauss-Legendre routes.
#![allow(dead_code)]

use statrs::function::gamma::ln_gamma;

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson on `[a, b]`, pre-split into `pieces` sub-intervals.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 40)
        })
        .sum()
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    if x < -10.0 {
        return 0.0;
    }
    if x >= 0.0 {
        0.5 + integrate(normal_pdf, 0.0, x, 1e-14)
    } else {
        0.5 - integrate(normal_pdf, x, 0.0, 1e-14)
    }
}

pub fn chi2_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * df;
    ((k - 1.0) * x.ln() - 0.5 * x - k * 2f64.ln() - ln_gamma(k)).exp()
}

pub fn chi2_sf(x: f64, df: f64) -> f64 {
    let upper = x + 60.0 + 20.0 * df;
    integrate(|t| chi2_pdf(t, df), x, upper, 1e-14)
}

pub fn t_pdf(x: f64, df: f64) -> f64 {
    (ln_gamma(0.5 * (df + 1.0))
        - ln_gamma(0.5 * df)
        - 0.5 * (df * std::f64::consts::PI).ln()
        - 0.5 * (df + 1.0) * (1.0 + x * x / df).ln())
    .exp()
}

pub fn t_sf(x: f64, df: f64) -> f64 {
    let inner = integrate(|t| t_pdf(t, df), 0.0, x.abs(), 1e-14);
    if x >= 0.0 {
        0.5 - inner
    } else {
        0.5 + inner
    }
}

pub fn f_pdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_beta = ln_gamma(0.5 * d1) + ln_gamma(0.5 * d2) - ln_gamma(0.5 * (d1 + d2));
    (0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln() - 0.5 * (d1 + d2) * (1.0 + d1 * x / d2).ln() - ln_beta).exp()
}

/// CDF by integrating the density in `u = sqrt(x)` to tame the origin.
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    integrate(|u| 2.0 * u * f_pdf(u * u, d1, d2), 0.0, x.sqrt(), 1e-13)
}

/// Noncentral F density as a Poisson mixture of scaled central F densities.
pub fn noncentral_f_pdf(x: f64, d1: f64, d2: f64, lambda: f64) -> f64 {
    let half = 0.5 * lambda;
    let mut total = 0.0;
    for j in 0..2000 {
        let j = j as f64;
        let w = if half == 0.0 {
            if j == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-half + j * half.ln() - ln_gamma(j + 1.0)).exp()
        };
        if w == 0.0 && j > half {
            break;
        }
        let dj = d1 + 2.0 * j;
        let scale = d1 / dj;
        total += w * scale * f_pdf(x * scale, dj, d2);
        if j > half + 40.0 + 10.0 * half.sqrt() {
            break;
        }
    }
    total
}

pub fn noncentral_f_cdf(x: f64, d1: f64, d2: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    integrate(|u| 2.0 * u * noncentral_f_pdf(u * u, d1, d2, lambda), 0.0, x.sqrt(), 1e-12)
}

/// P(range of k standard normals <= w), with the normal CDF itself from
/// an independent erf implementation.
pub fn range_cdf(w: f64, k: usize) -> f64 {
    use statrs::function::erf::erfc;
    let phi = |x: f64| 0.5 * erfc(-x / std::f64::consts::SQRT_2);
    let inner = |z: f64| normal_pdf(z) * (phi(z + w) - phi(z)).powi(k as i32 - 1);
    k as f64 * integrate(inner, -8.5, 8.5, 1e-12)
}

/// Studentized range CDF by nested adaptive Simpson.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> f64 {
    let half = 0.5 * df;
    let log_norm = half * df.ln() - ln_gamma(half) - (half - 1.0) * 2f64.ln();
    let density = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            (log_norm + (df - 1.0) * s.ln() - half * s * s).exp()
        }
    };
    let upper = 1.0 + 12.0 / df.sqrt() + if df < 5.0 { 8.0 } else { 0.0 };
    let lower = (1.0 - 12.0 / df.sqrt()).max(0.0);
    integrate(|s| density(s) * range_cdf(q * s, k), lower, upper, 1e-10)
}
