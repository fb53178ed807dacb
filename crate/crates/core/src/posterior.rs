//! Joint log posterior of the wavelet coefficients given empirical ones.
//!
//! Residuals `e = W^T (d - theta)` are evaluated with the fast inverse
//! transform; the likelihood is the positive-noise density of each `e_i`
//! (the Jacobian `|W| = 1` is dropped). Values are unnormalized and `-inf`
//! outside the support.

use crate::dwt::{inverse_into, Decomposition, WaveletFilter};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::priors::PriorSpec;
use crate::ram::Target;

/// Residuals below this are treated as off-support for the lognormal law.
const LOG_GUARD: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct PosteriorTarget {
    data: Decomposition,
    filter: WaveletFilter,
    noise: NoiseModel,
    prior: PriorSpec,
    levels: Vec<usize>,
}

impl PosteriorTarget {
    pub fn new(data: Decomposition, filter: WaveletFilter, noise: NoiseModel, prior: PriorSpec) -> Result<Self> {
        noise.validate()?;
        prior.validate()?;
        if !prior.covers(&data) {
            return Err(Error::InvalidParameter(format!(
                "prior covers levels {}..{} but data has detail levels {:?}",
                prior.primary_level,
                prior.primary_level + prior.levels.len(),
                data.detail_levels()
            )));
        }
        let levels = (0..data.len())
            .map(|i| data.level_of(i).unwrap_or(usize::MAX))
            .collect();
        Ok(Self {
            data,
            filter,
            noise,
            prior,
            levels,
        })
    }

    pub fn data(&self) -> &Decomposition {
        &self.data
    }

    pub fn filter(&self) -> &WaveletFilter {
        &self.filter
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    fn check(&self, theta: &Decomposition) -> Result<()> {
        if self.data.same_shape(theta) {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.data.len(),
                got: theta.len(),
            })
        }
    }

    /// `W^T (d - theta)` for a flat coefficient vector.
    pub fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.data.len();
        assert_eq!(theta.len(), n, "coefficient vector length");
        let diff: Vec<f64> = self.data.as_slice().iter().zip(theta).map(|(d, t)| d - t).collect();
        let mut out = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        inverse_into(&diff, self.data.primary_level(), &self.filter, &mut out, &mut scratch);
        out
    }

    pub fn log_likelihood(&self, theta: &Decomposition) -> Result<f64> {
        self.check(theta)?;
        Ok(log_likelihood_of_residuals(
            &self.noise,
            &self.residuals(theta.as_slice()),
        ))
    }

    /// Sum of detail-coefficient log prior densities.
    pub fn log_prior_flat(&self, theta: &[f64]) -> f64 {
        let mut total = 0.0;
        for (&t, &level) in theta.iter().zip(&self.levels) {
            if level == usize::MAX {
                continue;
            }
            total += self.prior.log_density(level, t);
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        total
    }

    pub fn log_posterior(&self, theta: &Decomposition) -> Result<f64> {
        self.check(theta)?;
        Ok(self.log_posterior_flat(theta.as_slice()))
    }

    pub fn log_posterior_flat(&self, theta: &[f64]) -> f64 {
        let prior = self.log_prior_flat(theta);
        if prior == f64::NEG_INFINITY {
            return prior;
        }
        prior + log_likelihood_of_residuals(&self.noise, &self.residuals(theta))
    }
}

impl Target for PosteriorTarget {
    fn dim(&self) -> usize {
        self.data.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.log_posterior_flat(x)
    }
}

/// Joint log density of iid positive noise values.
pub fn log_likelihood_of_residuals(noise: &NoiseModel, e: &[f64]) -> f64 {
    let n = e.len() as f64;
    match *noise {
        NoiseModel::Exponential { rate } => {
            let mut sum = 0.0;
            for &v in e {
                if !(v > 0.0) {
                    return f64::NEG_INFINITY;
                }
                sum += v;
            }
            n * rate.ln() - rate * sum
        }
        NoiseModel::LogNormal { sigma } => {
            let mut sum_log = 0.0;
            let mut sum_sq = 0.0;
            for &v in e {
                if !(v > LOG_GUARD) {
                    return f64::NEG_INFINITY;
                }
                let l = v.ln();
                sum_log += l;
                sum_sq += l * l;
            }
            -n * (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln() - sum_log - sum_sq / (2.0 * sigma * sigma)
        }
    }
}
