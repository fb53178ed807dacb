//! Residual diagnostics: exponential rate MLE and the one-sample
//! Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n / sum(residuals)`.
pub fn exponential_rate_mle(residuals: &[f64]) -> Result<f64> {
    let sum: f64 = residuals.iter().sum();
    if residuals.is_empty() || !(sum > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "residual sum must be positive, got {sum}"
        )));
    }
    Ok(residuals.len() as f64 / sum)
}

/// `sup_x |F_n(x) - F(x)|` for a continuous CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

const SERIES_TOL: f64 = 1e-12;

/// `P(K > t)` for the limiting Kolmogorov distribution.
///
/// Uses the alternating series `2 sum (-1)^(k-1) exp(-2 k^2 t^2)` for
/// `t >= 1` and the theta-function dual for smaller `t`, where the
/// alternating series converges too slowly.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if !(t > 0.0) {
        return 1.0;
    }
    if t >= 1.0 {
        let mut sum = 0.0;
        let mut k = 1.0_f64;
        loop {
            let term = (-2.0 * k * k * t * t).exp();
            sum += if (k as u64) % 2 == 1 { term } else { -term };
            if term < SERIES_TOL {
                break;
            }
            k += 1.0;
        }
        (2.0 * sum).clamp(0.0, 1.0)
    } else {
        // P(K <= t) = sqrt(2 pi) / t * sum exp(-(2k-1)^2 pi^2 / (8 t^2))
        let pi2 = std::f64::consts::PI.powi(2);
        let mut cdf = 0.0;
        let mut k = 1.0_f64;
        loop {
            let m = 2.0 * k - 1.0;
            let term = (-(m * m) * pi2 / (8.0 * t * t)).exp();
            cdf += term;
            if term < SERIES_TOL {
                break;
            }
            k += 1.0;
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / t;
        (1.0 - cdf).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// KS test of `sample` against `Exp(rate)`. Nonpositive values sit below
/// the support, where the CDF is zero.
pub fn ks_exponential(sample: &[f64], rate: f64) -> KsResult {
    let statistic = ks_statistic(sample, |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() });
    let p_value = kolmogorov_survival((sample.len() as f64).sqrt() * statistic);
    KsResult { statistic, p_value }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub rate: f64,
    pub ks_statistic: f64,
    pub p_value: f64,
}

/// Fits an exponential law to `observed - denoised` and tests the fit.
pub fn exponential_fit_report(observed: &[f64], denoised: &[f64]) -> Result<FitReport> {
    if observed.len() != denoised.len() {
        return Err(Error::Shape {
            expected: observed.len(),
            got: denoised.len(),
        });
    }
    let residuals: Vec<f64> = observed.iter().zip(denoised).map(|(y, f)| y - f).collect();
    let rate = exponential_rate_mle(&residuals)?;
    let ks = ks_exponential(&residuals, rate);
    Ok(FitReport {
        n: residuals.len(),
        rate,
        ks_statistic: ks.statistic,
        p_value: ks.p_value,
    })
}
