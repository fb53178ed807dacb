//! Shrinkage estimators on wavelet coefficients.
//!
//! The Bayesian rule is the posterior mean of the coefficient vector,
//! estimated by averaging robust adaptive Metropolis draws. The classical
//! baselines assume Gaussian noise with scale taken from the MAD of the
//! finest detail level, soft-threshold detail coefficients only and leave
//! the scaling block untouched.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::dwt::{forward, inverse, Decomposition, WaveletFilter};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::posterior::PosteriorTarget;
use crate::priors::PriorConfig;
use crate::ram::{run_posterior_chain, DrawMatrix, RamConfig};

/// Normal-consistency constant of the MAD.
pub const MAD_SCALE: f64 = 0.6745;

pub const DEFAULT_FDR_Q: f64 = 0.05;

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    x.signum() * (x.abs() - t).max(0.0)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `median(|x - median(x)|) / 0.6745` over the finest detail level.
pub fn mad_sigma(d: &Decomposition) -> f64 {
    let finest = d.detail(d.levels() - 1).expect("decomposition has a detail level");
    let m = median(finest);
    let dev: Vec<f64> = finest.iter().map(|x| (x - m).abs()).collect();
    median(&dev) / MAD_SCALE
}

fn soft_details(d: &Decomposition, threshold: impl Fn(usize) -> f64) -> Decomposition {
    let mut out = d.clone();
    for j in d.detail_levels() {
        let t = threshold(j);
        for x in out.detail_mut(j).expect("level in range") {
            *x = soft_threshold(*x, t);
        }
    }
    out
}

/// Universal threshold `sigma * sqrt(2 ln n)`.
pub fn universal_threshold_value(n: usize, sigma: f64) -> f64 {
    sigma * (2.0 * (n as f64).ln()).sqrt()
}

pub fn universal_threshold(d: &Decomposition) -> Decomposition {
    universal_threshold_with_sigma(d, mad_sigma(d))
}

pub fn universal_threshold_with_sigma(d: &Decomposition, sigma: f64) -> Decomposition {
    let t = universal_threshold_value(d.len(), sigma);
    soft_details(d, |_| t)
}

/// Minimizer of Stein's unbiased risk estimate for one level over the
/// candidates `{0} ∪ {|d_k|}`; ties resolve to the smallest threshold.
pub fn sure_level_threshold(level: &[f64], sigma: f64) -> f64 {
    let n = level.len();
    let mut abs: Vec<f64> = level.iter().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let s2 = sigma * sigma;
    let base = n as f64 * s2;
    let mut best_t = 0.0;
    let mut best = f64::INFINITY;
    let mut below = 0usize;
    let mut cum_sq = 0.0;
    let candidates = std::iter::once(0.0).chain(abs.iter().copied());
    for t in candidates {
        while below < n && abs[below] <= t {
            cum_sq += abs[below] * abs[below];
            below += 1;
        }
        let risk = base + cum_sq + (n - below) as f64 * t * t - 2.0 * s2 * below as f64;
        if risk < best {
            best = risk;
            best_t = t;
        }
    }
    best_t
}

/// SureShrink hybrid: universal threshold on sparse levels, otherwise the
/// SURE minimizer capped at the level's universal threshold.
pub fn sure_hybrid_threshold(level: &[f64], sigma: f64) -> f64 {
    let n = level.len() as f64;
    let t_univ = universal_threshold_value(level.len(), sigma);
    let energy = level.iter().map(|x| (x / sigma).powi(2)).sum::<f64>();
    let sparsity = (energy - n) / n;
    let critical = n.log2().powf(1.5) / n.sqrt();
    if sparsity <= critical {
        t_univ
    } else {
        sure_level_threshold(level, sigma).min(t_univ)
    }
}

pub fn sure_threshold(d: &Decomposition) -> Decomposition {
    sure_threshold_with_sigma(d, mad_sigma(d))
}

pub fn sure_threshold_with_sigma(d: &Decomposition, sigma: f64) -> Decomposition {
    if !(sigma > 0.0) {
        return d.clone();
    }
    soft_details(d, |j| sure_hybrid_threshold(d.detail(j).expect("level"), sigma))
}

/// Two-sided Gaussian tail probability `2 (1 - Phi(|z|))`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Number of Benjamini–Hochberg discoveries: largest `k` such that the
/// `k`-th smallest p-value is at most `k q / M`, or `None`.
pub fn bh_cutoff(pvalues: &[f64], q: f64) -> Option<usize> {
    let mut p = pvalues.to_vec();
    p.sort_by(f64::total_cmp);
    let m = p.len() as f64;
    p.iter()
        .enumerate()
        .rev()
        .find(|(i, &pk)| pk <= (*i as f64 + 1.0) * q / m)
        .map(|(i, _)| i + 1)
}

/// FDR threshold over all details, or `None` when nothing is discovered.
///
/// The threshold is the `|z|` at which the BH line crosses the `k`-th
/// p-value position, `sigma * Phi^{-1}(1 - k q / 2M)`, so exactly the
/// discovered coefficients survive soft thresholding.
pub fn fdr_threshold_value(details: &[f64], sigma: f64, q: f64) -> Option<f64> {
    let p: Vec<f64> = details.iter().map(|x| two_sided_p(x / sigma)).collect();
    let k = bh_cutoff(&p, q)?;
    let level = k as f64 * q / details.len() as f64;
    Some(sigma * std::f64::consts::SQRT_2 * erfc_inv(level))
}

pub fn fdr_threshold(d: &Decomposition, q: f64) -> Result<Decomposition> {
    fdr_threshold_with_sigma(d, mad_sigma(d), q)
}

pub fn fdr_threshold_with_sigma(d: &Decomposition, sigma: f64, q: f64) -> Result<Decomposition> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "FDR level must lie in (0, 1), got {q}"
        )));
    }
    if !(sigma > 0.0) {
        return Ok(d.clone());
    }
    Ok(match fdr_threshold_value(d.details(), sigma, q) {
        Some(t) => soft_details(d, |_| t),
        None => {
            let mut out = d.clone();
            out.details_mut().fill(0.0);
            out
        }
    })
}

fn soft_denoise(x: &[f64], filter: &WaveletFilter, primary_level: usize, t: f64) -> Result<Vec<f64>> {
    let d = forward(x, filter, primary_level)?;
    Ok(inverse(&soft_details(&d, |_| t), filter))
}

fn half_primary_level(n: usize, primary_level: usize) -> usize {
    // halves have one level fewer; keep at least one detail level
    let half_levels = n.trailing_zeros() as usize - 1;
    primary_level.min(half_levels - 1)
}

/// Two-fold cross-validation error of soft threshold `t`: each half of
/// the data is denoised and used to predict the other by averaging
/// neighbours (periodically).
pub fn cv_objective(y: &[f64], filter: &WaveletFilter, primary_level: usize, t: f64) -> Result<f64> {
    let n = y.len();
    if n < 8 {
        return Err(Error::InvalidParameter(format!(
            "cross-validation needs n >= 8, got {n}"
        )));
    }
    let half = n / 2;
    let j0 = half_primary_level(n, primary_level);
    let even: Vec<f64> = y.iter().step_by(2).copied().collect();
    let odd: Vec<f64> = y.iter().skip(1).step_by(2).copied().collect();
    let fe = soft_denoise(&even, filter, j0, t)?;
    let fo = soft_denoise(&odd, filter, j0, t)?;
    let mut err = 0.0;
    for i in 0..half {
        let pred_odd = 0.5 * (fe[i] + fe[(i + 1) % half]);
        let pred_even = 0.5 * (fo[(i + half - 1) % half] + fo[i]);
        err += (odd[i] - pred_odd).powi(2) + (even[i] - pred_even).powi(2);
    }
    Ok(err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvSelection {
    /// Minimizer on half-length data.
    pub half_threshold: f64,
    /// Threshold applied to the full data.
    pub threshold: f64,
    pub objective: f64,
}

const CV_BRACKET_POINTS: usize = 64;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of the CV objective over `[0, upper]`,
/// started from the best cell of a coarse scan.
pub fn cv_select(y: &[f64], filter: &WaveletFilter, primary_level: usize, upper: f64) -> Result<CvSelection> {
    let n = y.len();
    let f = |t: f64| cv_objective(y, filter, primary_level, t);
    let mut best_t = 0.0;
    let mut best = f(0.0)?;
    if upper > 0.0 {
        let step = upper / CV_BRACKET_POINTS as f64;
        let mut grid_best = 0;
        for i in 1..=CV_BRACKET_POINTS {
            let v = f(i as f64 * step)?;
            if v < best {
                best = v;
                best_t = i as f64 * step;
                grid_best = i;
            }
        }
        let mut a = grid_best.saturating_sub(1) as f64 * step;
        let mut b = ((grid_best + 1).min(CV_BRACKET_POINTS)) as f64 * step;
        let mut c = b - INV_PHI * (b - a);
        let mut e = a + INV_PHI * (b - a);
        let mut fc = f(c)?;
        let mut fe = f(e)?;
        let tol = 1e-10 * upper.max(1.0);
        while b - a > tol {
            if fc <= fe {
                b = e;
                e = c;
                fe = fc;
                c = b - INV_PHI * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + INV_PHI * (b - a);
                fe = f(e)?;
            }
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm < best {
            best = fm;
            best_t = mid;
        }
    }
    let correction = (1.0 - std::f64::consts::LN_2 / (n as f64).ln()).powf(-0.5);
    Ok(CvSelection {
        half_threshold: best_t,
        threshold: best_t * correction,
        objective: best,
    })
}

pub fn cv_threshold(d: &Decomposition, y: &[f64], filter: &WaveletFilter) -> Result<Decomposition> {
    if y.len() != d.len() {
        return Err(Error::Shape {
            expected: d.len(),
            got: y.len(),
        });
    }
    let upper = d.details().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let sel = cv_select(y, filter, d.primary_level(), upper)?;
    Ok(soft_details(d, |_| sel.threshold))
}

/// Posterior-mean rule with known noise law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRule {
    pub prior: PriorConfig,
    pub noise: NoiseModel,
    pub sampler: RamConfig,
}

#[derive(Debug, Clone)]
pub struct BayesEstimate {
    pub theta: Decomposition,
    pub acceptance_rate: f64,
    pub clamped_steps: u64,
}

/// Coordinatewise mean of the draws, laid out like `layout`.
pub fn posterior_mean(draws: &DrawMatrix, layout: &Decomposition) -> Result<Decomposition> {
    layout.with_coeffs(draws.column_means())
}

pub fn bayes_shrink(d: &Decomposition, rule: &BayesRule, filter: &WaveletFilter) -> Result<BayesEstimate> {
    let prior = rule.prior.elicit(d)?;
    let target = PosteriorTarget::new(d.clone(), filter.clone(), rule.noise, prior)?;
    let out = run_posterior_chain(&target, &rule.sampler)?;
    Ok(BayesEstimate {
        theta: posterior_mean(&out.draws, d)?,
        acceptance_rate: out.acceptance_rate,
        clamped_steps: out.clamped_steps,
    })
}

/// Named estimator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum EstimatorSpec {
    /// `noise: None` uses the true noise law supplied by the caller.
    Bayes {
        prior: PriorConfig,
        noise: Option<NoiseModel>,
        sampler: RamConfig,
    },
    Universal,
    Sure,
    Fdr {
        q: f64,
    },
    CrossValidation,
}

pub const ESTIMATOR_NAMES: [&str; 6] = ["univ", "cv", "fdr", "sure", "logistic", "beta"];

impl EstimatorSpec {
    /// Builds an estimator from its short name with default settings.
    pub fn from_name(name: &str, sampler: &RamConfig) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "univ" | "universal" => EstimatorSpec::Universal,
            "sure" => EstimatorSpec::Sure,
            "fdr" => EstimatorSpec::Fdr { q: DEFAULT_FDR_Q },
            "cv" => EstimatorSpec::CrossValidation,
            "logistic" => EstimatorSpec::Bayes {
                prior: PriorConfig::logistic(crate::priors::DEFAULT_TAU),
                noise: None,
                sampler: sampler.clone(),
            },
            "beta" => EstimatorSpec::Bayes {
                prior: PriorConfig::beta(crate::priors::DEFAULT_BETA_SHAPE, crate::priors::DEFAULT_BETA_SHAPE),
                noise: None,
                sampler: sampler.clone(),
            },
            _ => {
                return Err(Error::UnknownName {
                    kind: "estimator",
                    name: name.to_string(),
                    valid: ESTIMATOR_NAMES.join(", "),
                })
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            EstimatorSpec::Bayes { prior, .. } => prior.tail.name().to_string(),
            EstimatorSpec::Universal => "univ".into(),
            EstimatorSpec::Sure => "sure".into(),
            EstimatorSpec::Fdr { .. } => "fdr".into(),
            EstimatorSpec::CrossValidation => "cv".into(),
        }
    }

    /// Estimated coefficients for data `y`. `true_noise` backs Bayes rules
    /// without an explicit noise law; `seed` replaces the sampler seed.
    pub fn shrink(
        &self,
        y: &[f64],
        filter: &WaveletFilter,
        primary_level: usize,
        true_noise: &NoiseModel,
        seed: u64,
    ) -> Result<Decomposition> {
        let d = forward(y, filter, primary_level)?;
        match self {
            EstimatorSpec::Bayes { prior, noise, sampler } => {
                let rule = BayesRule {
                    prior: *prior,
                    noise: noise.unwrap_or(*true_noise),
                    sampler: RamConfig {
                        seed,
                        ..sampler.clone()
                    },
                };
                Ok(bayes_shrink(&d, &rule, filter)?.theta)
            }
            EstimatorSpec::Universal => Ok(universal_threshold(&d)),
            EstimatorSpec::Sure => Ok(sure_threshold(&d)),
            EstimatorSpec::Fdr { q } => fdr_threshold(&d, *q),
            EstimatorSpec::CrossValidation => cv_threshold(&d, y, filter),
        }
    }
}
