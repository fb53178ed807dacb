//! Spike-and-tail mixture priors on detail coefficients.
//!
//! The point mass at zero is represented by a narrow `Uniform(-eps, eps)`
//! density so that the mixture has a proper density that a random-walk
//! sampler can evaluate. Scaling coefficients carry a flat prior.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::dwt::Decomposition;
use crate::error::{Error, Result};

/// Smallest admissible beta half-support; all-zero levels are floored here.
pub const BETA_HALFWIDTH_FLOOR: f64 = 1e-6;

pub const DEFAULT_SPIKE_WIDTH: f64 = 1e-6;
pub const DEFAULT_ALPHA_R: f64 = 2.0;
pub const DEFAULT_TAU: f64 = 5.0;
pub const DEFAULT_BETA_SHAPE: f64 = 5.0;

/// Continuous component `g` of the mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TailFamily {
    Logistic { tau: f64 },
    Beta { a: f64, b: f64, m: f64 },
}

impl TailFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TailFamily::Logistic { tau } => tau > 0.0 && tau.is_finite(),
            TailFamily::Beta { a, b, m } => {
                a > 0.0 && b > 0.0 && m > 0.0 && a.is_finite() && b.is_finite() && m.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid tail parameters {self:?}")))
        }
    }

    /// Scale used to judge whether the spike is narrow enough.
    pub fn scale(&self) -> f64 {
        match *self {
            TailFamily::Logistic { tau } => tau,
            TailFamily::Beta { m, .. } => m,
        }
    }

    pub fn log_density(&self, theta: f64) -> f64 {
        match *self {
            TailFamily::Logistic { tau } => {
                let z = theta.abs() / tau;
                -z - tau.ln() - 2.0 * (-z).exp().ln_1p()
            }
            TailFamily::Beta { a, b, m } => {
                if !(theta >= -m && theta <= m) {
                    return f64::NEG_INFINITY;
                }
                (a - 1.0) * (theta + m).ln() + (b - 1.0) * (m - theta).ln()
                    - (a + b - 1.0) * (2.0 * m).ln()
                    - ln_beta(a, b)
            }
        }
    }
}

/// Mixture weight and tail for one detail level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPrior {
    pub level: usize,
    pub alpha: f64,
    pub tail: TailFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingPolicy {
    #[default]
    Flat,
}

/// Per-level mixture priors for every detail level of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub primary_level: usize,
    pub spike_width: f64,
    #[serde(default)]
    pub scaling: ScalingPolicy,
    pub levels: Vec<LevelPrior>,
}

impl PriorSpec {
    pub fn new(primary_level: usize, spike_width: f64, levels: Vec<LevelPrior>) -> Result<Self> {
        let spec = Self {
            primary_level,
            spike_width,
            scaling: ScalingPolicy::Flat,
            levels,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spike_width > 0.0 && self.spike_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spike width must be > 0, got {}",
                self.spike_width
            )));
        }
        for (i, lp) in self.levels.iter().enumerate() {
            if lp.level != self.primary_level + i {
                return Err(Error::InvalidParameter(format!(
                    "prior levels must run contiguously from {}",
                    self.primary_level
                )));
            }
            if !(lp.alpha >= 0.0 && lp.alpha < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "mixture weight at level {} must lie in [0, 1), got {}",
                    lp.level, lp.alpha
                )));
            }
            lp.tail.validate()?;
            let floored = matches!(lp.tail, TailFamily::Beta { m, .. } if m <= BETA_HALFWIDTH_FLOOR);
            if !floored && self.spike_width >= 1e-3 * lp.tail.scale() {
                return Err(Error::InvalidParameter(format!(
                    "spike width {} is not small against tail scale {} at level {}",
                    self.spike_width,
                    lp.tail.scale(),
                    lp.level
                )));
            }
        }
        Ok(())
    }

    pub fn level(&self, level: usize) -> Option<&LevelPrior> {
        level.checked_sub(self.primary_level).and_then(|i| self.levels.get(i))
    }

    /// True when the spec covers every detail level of `d`.
    pub fn covers(&self, d: &Decomposition) -> bool {
        self.primary_level == d.primary_level() && self.levels.len() == d.levels() - d.primary_level()
    }

    /// Log density of the mixture at level `level`; scaling coefficients
    /// (levels below the primary level) contribute zero.
    pub fn log_density(&self, level: usize, theta: f64) -> f64 {
        match self.level(level) {
            Some(lp) => mixture_log_density(lp.alpha, &lp.tail, self.spike_width, theta),
            None => 0.0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PriorSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// `log[alpha * U(-eps, eps)(theta) + (1 - alpha) * g(theta)]`.
pub fn mixture_log_density(alpha: f64, tail: &TailFamily, spike_width: f64, theta: f64) -> f64 {
    let log_spike = if alpha > 0.0 && theta.abs() <= spike_width {
        alpha.ln() - (2.0 * spike_width).ln()
    } else {
        f64::NEG_INFINITY
    };
    let log_tail = (1.0 - alpha).ln() + tail.log_density(theta);
    log_add_exp(log_spike, log_tail)
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    let lo = a.min(b);
    hi + (lo - hi).exp().ln_1p()
}

/// Level-dependent mixture weight `1 - (j - J0 + 1)^(-r)`.
pub fn elicit_alpha(level: usize, primary_level: usize, r: f64) -> Result<f64> {
    if level < primary_level {
        return Err(Error::LevelRange {
            level,
            lo: primary_level,
            hi: usize::MAX,
        });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("r must be > 0, got {r}")));
    }
    Ok(1.0 - ((level - primary_level + 1) as f64).powf(-r))
}

/// Beta half-support `max_k |d_jk|`, floored at [`BETA_HALFWIDTH_FLOOR`].
pub fn elicit_beta_halfwidth(details: &[f64]) -> Result<f64> {
    if details.is_empty() {
        return Err(Error::InvalidParameter("empty detail level".into()));
    }
    let m = details.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    Ok(m.max(BETA_HALFWIDTH_FLOOR))
}

/// Tail family before data-driven elicitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TailKind {
    Logistic { tau: f64 },
    Beta { a: f64, b: f64 },
}

impl TailKind {
    pub fn name(&self) -> &'static str {
        match self {
            TailKind::Logistic { .. } => "logistic",
            TailKind::Beta { .. } => "beta",
        }
    }
}

/// Hyperparameters from which a [`PriorSpec`] is elicited for given data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub tail: TailKind,
    pub alpha_r: f64,
    pub spike_width: f64,
}

impl PriorConfig {
    pub fn logistic(tau: f64) -> Self {
        Self {
            tail: TailKind::Logistic { tau },
            alpha_r: DEFAULT_ALPHA_R,
            spike_width: DEFAULT_SPIKE_WIDTH,
        }
    }

    pub fn beta(a: f64, b: f64) -> Self {
        Self {
            tail: TailKind::Beta { a, b },
            alpha_r: DEFAULT_ALPHA_R,
            spike_width: DEFAULT_SPIKE_WIDTH,
        }
    }

    pub fn with_spike_width(mut self, eps: f64) -> Self {
        self.spike_width = eps;
        self
    }

    pub fn with_alpha_r(mut self, r: f64) -> Self {
        self.alpha_r = r;
        self
    }

    /// Weights from `elicit_alpha`; beta half-supports from the empirical
    /// coefficients of each level.
    pub fn elicit(&self, d: &Decomposition) -> Result<PriorSpec> {
        let j0 = d.primary_level();
        let levels = d
            .detail_levels()
            .map(|j| {
                let tail = match self.tail {
                    TailKind::Logistic { tau } => TailFamily::Logistic { tau },
                    TailKind::Beta { a, b } => TailFamily::Beta {
                        a,
                        b,
                        m: elicit_beta_halfwidth(d.detail(j)?)?,
                    },
                };
                Ok(LevelPrior {
                    level: j,
                    alpha: elicit_alpha(j, j0, self.alpha_r)?,
                    tail,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PriorSpec::new(j0, self.spike_width, levels)
    }
}
