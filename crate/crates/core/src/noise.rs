//! Strictly positive noise laws: exponential and zero-location lognormal.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    #[serde(alias = "exp")]
    Exponential,
    LogNormal,
}

impl NoiseFamily {
    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Exponential => "exponential",
            NoiseFamily::LogNormal => "lognormal",
        }
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp" | "exponential" => Ok(NoiseFamily::Exponential),
            "lognormal" | "ln" => Ok(NoiseFamily::LogNormal),
            _ => Err(Error::UnknownName {
                kind: "noise family",
                name: s.to_string(),
                valid: "exp, lognormal".to_string(),
            }),
        }
    }
}

/// Noise law with support `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum NoiseModel {
    Exponential { rate: f64 },
    LogNormal { sigma: f64 },
}

impl NoiseModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponential rate must be > 0, got {rate}"
            )));
        }
        Ok(NoiseModel::Exponential { rate })
    }

    pub fn lognormal(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lognormal sigma must be > 0, got {sigma}"
            )));
        }
        Ok(NoiseModel::LogNormal { sigma })
    }

    pub fn family(&self) -> NoiseFamily {
        match self {
            NoiseModel::Exponential { .. } => NoiseFamily::Exponential,
            NoiseModel::LogNormal { .. } => NoiseFamily::LogNormal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Exponential { rate } => Self::exponential(rate).map(|_| ()),
            NoiseModel::LogNormal { sigma } => Self::lognormal(sigma).map(|_| ()),
        }
    }

    /// Natural log of the density; `-inf` off the support.
    pub fn log_density(&self, e: f64) -> f64 {
        if e.is_nan() || e <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            NoiseModel::Exponential { rate } => rate.ln() - rate * e,
            NoiseModel::LogNormal { sigma } => {
                let le = e.ln();
                -le - (sigma * (2.0 * PI).sqrt()).ln() - le * le / (2.0 * sigma * sigma)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NoiseModel::Exponential { rate } => 1.0 / rate,
            NoiseModel::LogNormal { sigma } => (sigma * sigma / 2.0).exp(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Exponential { rate } => 1.0 / (rate * rate),
            NoiseModel::LogNormal { sigma } => lognormal_variance(sigma * sigma),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `E[e^2]`, the mean squared error of an estimator that returns the data.
    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        self.variance() + m * m
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            NoiseModel::Exponential { rate } => {
                let dist = Exp::new(rate).expect("validated rate");
                (0..count).map(|_| dist.sample(rng)).collect()
            }
            NoiseModel::LogNormal { sigma } => {
                let dist = LogNormal::new(0.0, sigma).expect("validated sigma");
                (0..count).map(|_| dist.sample(rng)).collect()
            }
        }
    }

    /// Seeded iid draws.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        self.sample_with(count, &mut rng)
    }
}

fn lognormal_variance(s2: f64) -> f64 {
    s2.exp_m1() * s2.exp()
}

/// Population (divide-by-n) standard deviation.
pub fn population_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Noise model whose standard deviation is `sd(signal) / snr`.
pub fn calibrate_to_snr(family: NoiseFamily, signal: &[f64], snr: f64) -> Result<NoiseModel> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::Calibration(format!("snr must be > 0, got {snr}")));
    }
    if signal.is_empty() {
        return Err(Error::Calibration("empty signal".into()));
    }
    let sd = population_sd(signal);
    if !(sd > 0.0) {
        return Err(Error::Calibration("signal is constant".into()));
    }
    let target = sd / snr;
    match family {
        NoiseFamily::Exponential => NoiseModel::exponential(snr / sd),
        NoiseFamily::LogNormal => {
            let goal = target * target;
            let (mut lo, mut hi) = (0.0_f64, 50.0_f64);
            if lognormal_variance(hi) < goal {
                return Err(Error::Calibration(format!(
                    "noise sd {target} beyond the lognormal search range"
                )));
            }
            // bisect until the bracket stops shrinking
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if lognormal_variance(mid) < goal {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s2 = if (lognormal_variance(lo) - goal).abs() <= (lognormal_variance(hi) - goal).abs() {
                lo
            } else {
                hi
            };
            if s2 <= 0.0 {
                return Err(Error::Calibration("lognormal variance underflow".into()));
            }
            NoiseModel::lognormal(s2.sqrt())
        }
    }
}
