//! Donoho–Johnstone test functions and the replicated simulation harness.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dwt::{dyadic_exponent, Wavelet, WaveletFilter};
use crate::error::{Error, Result};
use crate::noise::{calibrate_to_snr, population_sd, NoiseFamily, NoiseModel};
use crate::shrink::EstimatorSpec;

const LOCATIONS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];

/// Standard deviation the test signals are rescaled to before noise is
/// added, the usual convention for these benchmarks.
pub const DEFAULT_SIGNAL_SD: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    Bumps,
    Blocks,
    Doppler,
    Heavisine,
}

/// Sign with `sgn(0) = 0`.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [
        TestFunction::Bumps,
        TestFunction::Blocks,
        TestFunction::Doppler,
        TestFunction::Heavisine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Bumps => "bumps",
            TestFunction::Blocks => "blocks",
            TestFunction::Doppler => "doppler",
            TestFunction::Heavisine => "heavisine",
        }
    }

    pub fn evaluate(self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!(
                "test functions live on [0, 1], got {x}"
            )));
        }
        Ok(match self {
            TestFunction::Bumps => LOCATIONS
                .iter()
                .zip(BUMP_HEIGHTS.iter().zip(&BUMP_WIDTHS))
                .map(|(xl, (h, w))| h * (1.0 + ((x - xl) / w).abs()).powi(-4))
                .sum(),
            TestFunction::Blocks => LOCATIONS
                .iter()
                .zip(&BLOCK_HEIGHTS)
                .map(|(xl, h)| h * (1.0 + sgn(x - xl)) / 2.0)
                .sum(),
            TestFunction::Doppler => (x * (1.0 - x)).sqrt() * (2.1 * PI / (x + 0.05)).sin(),
            TestFunction::Heavisine => 4.0 * (4.0 * PI * x).sin() - sgn(x - 0.3) - sgn(0.72 - x),
        })
    }
}

impl std::str::FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownName {
                kind: "test function",
                name: s.to_string(),
                valid: "bumps, blocks, doppler, heavisine".into(),
            })
    }
}

/// `f(i / n)` for `i = 1..=n`.
pub fn sample_grid(function: TestFunction, n: usize) -> Result<Vec<f64>> {
    dyadic_exponent(n)?;
    if n < 4 {
        return Err(Error::InvalidParameter(format!("grid needs n >= 4, got {n}")));
    }
    (1..=n).map(|i| function.evaluate(i as f64 / n as f64)).collect()
}

/// Affinely rescales `signal` to population standard deviation `sd`,
/// keeping its mean.
pub fn rescale_to_sd(signal: &[f64], sd: f64) -> Result<Vec<f64>> {
    let current = population_sd(signal);
    if !(current > 0.0) {
        return Err(Error::InvalidParameter("cannot rescale a constant signal".into()));
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    Ok(signal.iter().map(|v| mean + (v - mean) * sd / current).collect())
}

/// What an estimator sees in one replication.
pub struct Observation<'a> {
    pub truth: &'a [f64],
    pub y: &'a [f64],
    pub filter: &'a WaveletFilter,
    pub primary_level: usize,
    pub noise: NoiseModel,
    pub seed: u64,
}

/// Anything that maps noisy data to a time-domain estimate.
pub trait Estimator: Sync {
    fn name(&self) -> String;
    fn estimate(&self, obs: &Observation<'_>) -> Result<Vec<f64>>;
}

impl Estimator for EstimatorSpec {
    fn name(&self) -> String {
        EstimatorSpec::name(self)
    }

    fn estimate(&self, obs: &Observation<'_>) -> Result<Vec<f64>> {
        let theta = self.shrink(obs.y, obs.filter, obs.primary_level, &obs.noise, obs.seed)?;
        Ok(crate::dwt::inverse(&theta, obs.filter))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub function: TestFunction,
    pub n: usize,
    pub snr: f64,
    pub family: NoiseFamily,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_filter")]
    pub filter: Wavelet,
    #[serde(default = "default_primary_level")]
    pub primary_level: usize,
    /// Rescale the sampled function to this standard deviation; `None`
    /// keeps the raw formula values.
    #[serde(default = "default_signal_sd")]
    pub signal_sd: Option<f64>,
}

fn default_filter() -> Wavelet {
    Wavelet::Daub10
}

fn default_primary_level() -> usize {
    DEFAULT_PRIMARY_LEVEL
}

fn default_signal_sd() -> Option<f64> {
    Some(DEFAULT_SIGNAL_SD)
}

pub const DEFAULT_PRIMARY_LEVEL: usize = 3;

impl ScenarioConfig {
    pub fn new(function: TestFunction, n: usize, snr: f64, family: NoiseFamily) -> Self {
        Self {
            function,
            n,
            snr,
            family,
            replications: 10,
            seed: 1,
            filter: default_filter(),
            primary_level: default_primary_level(),
            signal_sd: default_signal_sd(),
        }
    }

    /// The noiseless signal on the grid.
    pub fn truth(&self) -> Result<Vec<f64>> {
        let raw = sample_grid(self.function, self.n)?;
        match self.signal_sd {
            Some(sd) => rescale_to_sd(&raw, sd),
            None => Ok(raw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub function: TestFunction,
    pub n: usize,
    pub snr: f64,
    pub family: NoiseFamily,
    pub estimator: String,
    pub amse: f64,
    pub mse_by_replication: Vec<f64>,
}

/// SplitMix64 mix of a base seed with a stream index.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mse(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / truth.len() as f64
}

/// Runs every estimator on `replications` shared noisy datasets.
pub fn run_scenario(config: &ScenarioConfig, estimators: &[&dyn Estimator]) -> Result<Vec<ScenarioResult>> {
    if config.replications == 0 {
        return Err(Error::InvalidParameter("replications must be positive".into()));
    }
    let truth = config.truth()?;
    let noise = calibrate_to_snr(config.family, &truth, config.snr)?;
    let filter = config.filter.filter();

    let per_rep: Vec<Vec<f64>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(config.seed, rep as u64);
            let e = noise.sample(truth.len(), derive_seed(rep_seed, 0));
            let y: Vec<f64> = truth.iter().zip(&e).map(|(f, e)| f + e).collect();
            let obs = Observation {
                truth: &truth,
                y: &y,
                filter: &filter,
                primary_level: config.primary_level,
                noise,
                seed: derive_seed(rep_seed, 1),
            };
            estimators
                .iter()
                .map(|est| est.estimate(&obs).map(|f_hat| mse(&f_hat, &truth)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(estimators
        .iter()
        .enumerate()
        .map(|(k, est)| {
            let mse_by_replication: Vec<f64> = per_rep.iter().map(|r| r[k]).collect();
            ScenarioResult {
                function: config.function,
                n: config.n,
                snr: config.snr,
                family: config.family,
                estimator: est.name(),
                amse: mse_by_replication.iter().sum::<f64>() / mse_by_replication.len() as f64,
                mse_by_replication,
            }
        })
        .collect())
}

/// Writes the AMSE summary (one row per scenario and estimator).
pub fn write_summary_csv<W: Write>(results: &[ScenarioResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["function", "n", "snr", "family", "estimator", "replications", "amse"])?;
    for r in results {
        w.write_record([
            r.function.name().to_string(),
            r.n.to_string(),
            r.snr.to_string(),
            r.family.name().to_string(),
            r.estimator.clone(),
            r.mse_by_replication.len().to_string(),
            r.amse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per replication, ready for boxplots.
pub fn write_long_csv<W: Write>(results: &[ScenarioResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["function", "n", "snr", "family", "estimator", "replication", "mse"])?;
    for r in results {
        for (rep, m) in r.mse_by_replication.iter().enumerate() {
            w.write_record([
                r.function.name().to_string(),
                r.n.to_string(),
                r.snr.to_string(),
                r.family.name().to_string(),
                r.estimator.clone(),
                rep.to_string(),
                m.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
