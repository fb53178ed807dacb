use poswave::diagnostics::{exponential_fit_report, exponential_rate_mle, ks_exponential, ks_statistic};
use poswave::noise::NoiseModel;

#[test]
fn constant_residuals_give_reciprocal() {
    for n in [1, 7, 64] {
        assert_eq!(exponential_rate_mle(&vec![0.25; n]).unwrap(), 4.0);
    }
    let y = vec![3.25; 16];
    let f = vec![3.0; 16];
    assert_eq!(exponential_fit_report(&y, &f).unwrap().rate, 4.0);
}

#[test]
fn ks_matches_brute_force_sup() {
    let sample: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let cdf = |x: f64| 1.0 - (-x).exp();
    let n = sample.len() as f64;
    let mut brute: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        // the empirical CDF jumps from i/n to (i+1)/n at x
        brute = brute.max((cdf(x) - i as f64 / n).abs());
        brute = brute.max(((i + 1) as f64 / n - cdf(x)).abs());
    }
    assert!((ks_statistic(&sample, cdf) - brute).abs() < 1e-15);
    assert!((ks_exponential(&sample, 1.0).statistic - brute).abs() < 1e-15);
}

#[test]
fn ks_unsorted_input() {
    let a = [0.3, 2.0, 0.1, 0.9];
    let b = [0.1, 0.3, 0.9, 2.0];
    assert_eq!(ks_exponential(&a, 1.3), ks_exponential(&b, 1.3));
}

#[test]
fn calibration_under_specified_null() {
    let model = NoiseModel::exponential(1.0).unwrap();
    let rejections = (0..200u64)
        .filter(|&s| ks_exponential(&model.sample(1000, s), 1.0).p_value < 0.05)
        .count();
    let rate = rejections as f64 / 200.0;
    assert!((0.01..=0.10).contains(&rate), "{rate}");
}

#[test]
fn misfit_is_rejected() {
    let uniform: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
    let r = ks_exponential(&uniform, exponential_rate_mle(&uniform).unwrap());
    assert!(r.p_value < 1e-6);
}

#[test]
fn nonpositive_sum_is_an_error() {
    assert!(exponential_fit_report(&[1.0, 2.0], &[1.5, 2.5]).is_err());
}
