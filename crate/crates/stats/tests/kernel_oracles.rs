mod common;

use common::oracle;
use conformity_stats::distributions::*;
use proptest::prelude::*;

#[test]
fn normal_matches_oracle() {
    for i in 0..=40 {
        let x = -8.0 + 0.4 * i as f64;
        let got = normal_cdf(x).unwrap().value;
        assert!((got - oracle::normal_cdf(x)).abs() < 1e-10, "x={x}");
    }
}

#[test]
fn chi2_matches_oracle() {
    for &df in &[1.0, 2.0, 3.5, 10.0, 40.0] {
        for &x in &[0.05, 0.5, 1.0, 3.841, 7.0, 15.0, 60.0] {
            let got = chi2_sf(x, df).unwrap();
            let want = oracle::chi2_sf(x, df);
            assert!((got.value - want).abs() < 1e-10, "df={df} x={x} got={} want={want}", got.value);
            assert!(got.abs_error_bound <= 1e-10);
        }
    }
}

#[test]
fn t_matches_oracle() {
    for &df in &[1.0, 2.5, 6.0, 30.0, 200.0] {
        for &x in &[-4.0, -1.0, 0.3, 1.0, 2.228, 5.0] {
            let got = t_sf(x, df).unwrap().value;
            let want = oracle::t_sf(x, df);
            assert!((got - want).abs() < 1e-10, "df={df} x={x} got={got} want={want}");
        }
    }
}

#[test]
fn f_matches_oracle() {
    for &(d1, d2) in &[(1.0, 5.0), (2.0, 6.0), (3.0, 20.0), (7.5, 13.2)] {
        for &x in &[0.1, 0.7, 1.5, 3.0, 8.64] {
            let got = f_cdf(x, d1, d2).unwrap().value;
            let want = oracle::f_cdf(x, d1, d2);
            assert!((got - want).abs() < 1e-10, "d1={d1} d2={d2} x={x} got={got} want={want}");
        }
    }
}

#[test]
fn noncentral_f_matches_oracle() {
    for &(d1, d2, lambda) in &[(2.0, 12.0, 3.0), (3.0, 40.0, 15.0), (1.0, 8.0, 0.7), (4.0, 100.0, 60.0)] {
        for &x in &[0.5, 1.5, 3.0, 6.0] {
            let got = noncentral_f_cdf(x, d1, d2, lambda).unwrap();
            let want = oracle::noncentral_f_cdf(x, d1, d2, lambda);
            assert!(got.abs_error_bound <= 1e-8);
            assert!((got.value - want).abs() < 1e-8, "({d1},{d2},{lambda}) x={x} got={} want={want}", got.value);
        }
    }
}

#[test]
fn studentized_range_matches_oracle() {
    for &(q, k, df) in &[(3.877, 3usize, 10.0), (2.5, 2, 4.0), (4.2, 5, 20.0), (1.0, 3, 60.0)] {
        let got = studentized_range_cdf(q, k, df).unwrap();
        let want = oracle::studentized_range_cdf(q, k, df);
        assert!(got.abs_error_bound <= 1e-8);
        assert!((got.value - want).abs() < 1e-8, "q={q} k={k} df={df} got={} want={want}", got.value);
    }
}

#[test]
fn published_studentized_range_table() {
    // upper 5% points
    for &(k, df, q) in
        &[(2usize, 10.0, 3.151), (3, 10.0, 3.877), (4, 10.0, 4.327), (3, 20.0, 3.578), (2, f64::INFINITY, 2.772)]
    {
        let got = studentized_range_critical(0.05, k, df).unwrap();
        assert!((got - q).abs() < 2e-3, "k={k} df={df} got={got}");
    }
}

#[test]
fn t_approaches_normal_for_large_df() {
    for &x in &[0.5, 1.0, 1.96, 3.0] {
        let t = t_sf(x, 10_000.0).unwrap().value;
        let z = normal_sf(x).unwrap().value;
        assert!((t - z).abs() < 1e-4);
    }
}

#[test]
fn cdfs_monotone_on_dense_grid() {
    let grid: Vec<f64> = (0..1000).map(|i| i as f64 * 0.01).collect();
    let mut prev = [0.0f64; 5];
    for &x in &grid {
        let vals = [
            normal_cdf(x - 5.0).unwrap().value,
            1.0 - chi2_sf(x, 3.0).unwrap().value,
            1.0 - t_sf(x - 5.0, 4.0).unwrap().value,
            f_cdf(x, 2.0, 9.0).unwrap().value,
            noncentral_f_cdf(x, 2.0, 9.0, 4.0).unwrap().value,
        ];
        for (v, p) in vals.iter().zip(prev.iter_mut()) {
            assert!(*v + 1e-15 >= *p, "x={x}");
            *p = *v;
        }
    }
}

#[test]
fn studentized_range_monotone() {
    let mut prev = 0.0;
    for i in 0..60 {
        let q = 0.1 * i as f64;
        let v = studentized_range_cdf(q, 4, 12.0).unwrap().value;
        assert!(v + 1e-12 >= prev);
        prev = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sf_and_cdf_are_complements(x in 0.0f64..30.0, d1 in 0.5f64..30.0, d2 in 0.5f64..60.0) {
        let chi = chi2_sf(x, d1).unwrap().value + chi2_cdf(x, d1).unwrap().value;
        prop_assert!((chi - 1.0).abs() < 1e-12);
        let f = f_sf(x, d1, d2).unwrap().value + f_cdf(x, d1, d2).unwrap().value;
        prop_assert!((f - 1.0).abs() < 1e-12);
        let n = normal_sf(x - 15.0).unwrap().value + normal_cdf(x - 15.0).unwrap().value;
        prop_assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noncentral_at_zero_is_central(x in 0.0f64..20.0, d1 in 0.5f64..30.0, d2 in 0.5f64..60.0) {
        let c = f_cdf(x, d1, d2).unwrap().value;
        let nc = noncentral_f_cdf(x, d1, d2, 0.0).unwrap().value;
        prop_assert!((c - nc).abs() <= 1e-10);
    }

    #[test]
    fn chi2_random_sweep_against_oracle(x in 0.01f64..40.0, df in 0.5f64..25.0) {
        let got = chi2_sf(x, df).unwrap().value;
        prop_assert!((got - oracle::chi2_sf(x, df)).abs() < 1e-10);
    }
}
