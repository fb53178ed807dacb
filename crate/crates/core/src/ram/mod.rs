//! Robust adaptive Metropolis sampler.
//!
//! Random-walk proposals `theta + S u` with `u ~ N(0, I)`. After every
//! step the lower-triangular shape `S` is refactored so that
//!
//! ```text
//! S_k S_k^T = S_{k-1} (I + eta_k (p_k - gamma) u u^T / |u|^2) S_{k-1}^T
//! ```
//!
//! where `p_k` is the acceptance probability of the step, `gamma` the
//! target rate and `eta_k = min(1, d k^(-2/3))`. The right-hand side is a
//! rank-one modification of `S S^T` along `S u`, applied as a Cholesky
//! update or downdate in `O(d^2)`.

mod cholesky;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use cholesky::{DowndateFailed, LowerTriangular};

use crate::dwt::{forward, inverse, Decomposition};
use crate::error::{Error, Result};
use crate::noise::population_sd;
use crate::posterior::PosteriorTarget;
use crate::priors::TailFamily;

/// Unnormalized log density on `R^d`; `-inf` marks zero density.
pub trait Target {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> f64;
}

impl<T: Target + ?Sized> Target for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
}

pub const DEFAULT_TARGET_ACCEPTANCE: f64 = 0.234;

/// Maximum number of halvings of the adaptation coefficient before a
/// step's shape update is skipped.
const MAX_CLAMPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RamConfig {
    pub target_acceptance: f64,
    /// Retained draws `L`.
    pub iterations: usize,
    pub burn_in: usize,
    /// Diagonal of `S_1`; `None` picks a data-driven default.
    pub initial_scale: Option<f64>,
    pub seed: u64,
    pub record_trace: bool,
}

impl Default for RamConfig {
    fn default() -> Self {
        Self {
            target_acceptance: DEFAULT_TARGET_ACCEPTANCE,
            iterations: 10_000,
            burn_in: 1_000,
            initial_scale: None,
            seed: 0,
            record_trace: false,
        }
    }
}

impl RamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target acceptance must lie in (0, 1), got {}",
                self.target_acceptance
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be positive".into()));
        }
        if let Some(s) = self.initial_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("initial scale must be > 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Adaptation step size `min(1, dim * k^(-2/3))`, `k >= 1`.
pub fn adaptation_step(dim: usize, k: u64) -> f64 {
    (dim as f64 * (k as f64).powf(-2.0 / 3.0)).min(1.0)
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub log_density: f64,
    pub shape: LowerTriangular,
    /// Completed steps.
    pub iteration: u64,
    pub accepted: u64,
    /// Steps whose shape update needed the adaptation coefficient halved.
    pub clamped: u64,
}

impl ChainState {
    pub fn new<T: Target>(target: &T, theta: Vec<f64>, shape: LowerTriangular) -> Result<Self> {
        if theta.len() != target.dim() || shape.dim() != target.dim() {
            return Err(Error::Shape {
                expected: target.dim(),
                got: theta.len(),
            });
        }
        if !shape.has_positive_diagonal() {
            return Err(Error::InvalidParameter(
                "initial shape needs a positive diagonal".into(),
            ));
        }
        let log_density = target.log_density(&theta);
        if !log_density.is_finite() {
            return Err(Error::Initialization(format!(
                "initial state has log density {log_density}"
            )));
        }
        Ok(Self {
            theta,
            log_density,
            shape,
            iteration: 0,
            accepted: 0,
            clamped: 0,
        })
    }
}

/// What happened in one [`ram_step`].
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub direction: Vec<f64>,
    pub acceptance_probability: f64,
    pub accepted: bool,
    pub eta: f64,
    /// Coefficient actually applied to `u u^T / |u|^2`; differs from
    /// `eta * (p - gamma)` only when clamping fired.
    pub coefficient: f64,
    pub clamped: bool,
    pub log_density: f64,
}

pub fn ram_step<T: Target, R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &T,
    config: &RamConfig,
    rng: &mut R,
) -> StepInfo {
    let dim = state.theta.len();
    let u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let su = state.shape.mul_vec(&u);
    let proposal: Vec<f64> = state.theta.iter().zip(&su).map(|(t, s)| t + s).collect();
    let proposal_ld = target.log_density(&proposal);

    let p = if proposal_ld == f64::NEG_INFINITY || proposal_ld.is_nan() {
        0.0
    } else {
        (proposal_ld - state.log_density).exp().min(1.0)
    };
    let draw: f64 = rng.random();
    let accepted = draw < p;
    if accepted {
        state.theta = proposal;
        state.log_density = proposal_ld;
        state.accepted += 1;
    }

    state.iteration += 1;
    let eta = adaptation_step(dim, state.iteration);
    let mut coefficient = eta * (p - config.target_acceptance);
    let norm_sq: f64 = u.iter().map(|x| x * x).sum();
    let mut clamped = false;
    if coefficient != 0.0 && norm_sq > 0.0 {
        let sign = coefficient.signum();
        if sign > 0.0 {
            let mut v: Vec<f64> = su.iter().map(|x| x * (coefficient / norm_sq).sqrt()).collect();
            let ok = state.shape.rank_one_update(&mut v, 1.0).is_ok();
            debug_assert!(ok, "rank-one update cannot fail");
        } else {
            let backup = state.shape.clone();
            let mut attempts = 0;
            loop {
                let mut v: Vec<f64> = su.iter().map(|x| x * (-coefficient / norm_sq).sqrt()).collect();
                if state.shape.rank_one_update(&mut v, -1.0).is_ok() {
                    break;
                }
                state.shape = backup.clone();
                clamped = true;
                attempts += 1;
                coefficient *= 0.5;
                if attempts >= MAX_CLAMPS {
                    coefficient = 0.0;
                    break;
                }
            }
        }
    }
    if clamped {
        state.clamped += 1;
    }
    debug_assert!(state.shape.has_positive_diagonal());

    StepInfo {
        direction: u,
        acceptance_probability: p,
        accepted,
        eta,
        coefficient,
        clamped,
        log_density: state.log_density,
    }
}

/// Row-major matrix of retained draws.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DrawMatrix {
    pub fn from_rows(cols: usize, data: Vec<f64>) -> Self {
        assert!(cols > 0 && data.len().is_multiple_of(cols));
        Self {
            rows: data.len() / cols,
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        let n = self.rows as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub accepted: bool,
    pub log_density: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: DrawMatrix,
    /// Acceptance rate over the retained iterations.
    pub acceptance_rate: f64,
    pub clamped_steps: u64,
    pub final_state: ChainState,
    pub trace: Option<Vec<TraceRow>>,
}

/// Runs `burn_in + iterations` steps from `initial`, keeping the last
/// `iterations` states.
pub fn run_chain<T: Target>(target: &T, initial: Vec<f64>, config: &RamConfig) -> Result<ChainOutput> {
    let scale = config.initial_scale.unwrap_or(1.0);
    run_chain_with_shape(
        target,
        initial,
        LowerTriangular::scaled_identity(target.dim(), scale),
        config,
    )
}

/// As [`run_chain`], starting from an explicit shape factor `S_1`;
/// `config.initial_scale` is ignored.
pub fn run_chain_with_shape<T: Target>(
    target: &T,
    initial: Vec<f64>,
    shape: LowerTriangular,
    config: &RamConfig,
) -> Result<ChainOutput> {
    config.validate()?;
    let dim = target.dim();
    if shape.dim() != dim || !shape.has_positive_diagonal() {
        return Err(Error::InvalidParameter(
            "initial shape must be a dim x dim factor with positive diagonal".into(),
        ));
    }
    let mut state = ChainState::new(target, initial, shape)?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut trace = config
        .record_trace
        .then(|| Vec::with_capacity(config.burn_in + config.iterations));
    let mut data = Vec::with_capacity(config.iterations * dim);
    let mut retained_accepts = 0u64;
    for step in 0..(config.burn_in + config.iterations) {
        let info = ram_step(&mut state, target, config, &mut rng);
        if let Some(t) = trace.as_mut() {
            t.push(TraceRow {
                iteration: state.iteration,
                accepted: info.accepted,
                log_density: info.log_density,
            });
        }
        if step >= config.burn_in {
            retained_accepts += info.accepted as u64;
            data.extend_from_slice(&state.theta);
        }
    }
    Ok(ChainOutput {
        draws: DrawMatrix::from_rows(dim, data),
        acceptance_rate: retained_accepts as f64 / config.iterations as f64,
        clamped_steps: state.clamped,
        final_state: state,
        trace,
    })
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "accepted", "log_posterior"])?;
    for row in trace {
        w.write_record([
            row.iteration.to_string(),
            (row.accepted as u8).to_string(),
            row.log_density.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Admissible starting point: the data shifted down by `offset`, so that
/// every time-domain residual equals `offset`. Coefficients on the edge of
/// a beta support are shrunk toward zero; the scaling block is then
/// shifted to keep every residual at least `offset`.
pub fn initialize(target: &PosteriorTarget, offset: f64) -> Result<Decomposition> {
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(Error::InvalidParameter(format!("offset must be > 0, got {offset}")));
    }
    let d = target.data();
    let filter = target.filter();
    let j0 = d.primary_level();
    let y = inverse(d, filter);
    let shifted: Vec<f64> = y.iter().map(|v| v - offset).collect();
    let start = forward(&shifted, filter, j0)?;
    if target.log_posterior(&start)?.is_finite() {
        return Ok(start);
    }

    let unit = forward(&vec![1.0; y.len()], filter, j0)?;
    let offending: Vec<usize> = (0..start.len())
        .filter(|&i| {
            let Some(level) = start.level_of(i) else { return false };
            match target.prior().level(level).map(|lp| lp.tail) {
                Some(TailFamily::Beta { .. }) => {
                    target.prior().log_density(level, start.as_slice()[i]) == f64::NEG_INFINITY
                }
                _ => false,
            }
        })
        .collect();

    let mut factor = 1.0;
    for _ in 0..100 {
        factor *= 0.5;
        let mut theta = start.clone();
        for &i in &offending {
            theta.as_mut_slice()[i] *= factor;
        }
        let e = target.residuals(theta.as_slice());
        let min_e = e.iter().copied().fold(f64::INFINITY, f64::min);
        if min_e < offset {
            let lift = offset - min_e;
            for (t, u) in theta.as_mut_slice().iter_mut().zip(unit.as_slice()) {
                *t -= lift * u;
            }
        }
        if target.log_posterior(&theta)?.is_finite() {
            return Ok(theta);
        }
    }
    Err(Error::Initialization(
        "no admissible starting point after 100 bisection rounds".into(),
    ))
}

/// `0.1 * sd(finest-level empirical details)`, falling back to the noise
/// standard deviation when that level is flat.
pub fn default_initial_scale(target: &PosteriorTarget) -> f64 {
    let d = target.data();
    let finest = d.detail(d.levels() - 1).expect("at least one detail level");
    let sd = population_sd(finest);
    if sd > 0.0 && sd.is_finite() {
        0.1 * sd
    } else {
        0.1 * target.noise().std_dev()
    }
}

/// Initializes at the noise mean and samples the posterior.
///
/// When every empirical detail coefficient lies inside the spike they all
/// start there, so without an explicit `initial_scale` the detail
/// directions of levels carrying a spike get steps of half its width, beta
/// levels at most half their support radius, and the rest keep the
/// noise-driven scale.
pub fn run_posterior_chain(target: &PosteriorTarget, config: &RamConfig) -> Result<ChainOutput> {
    let start = initialize(target, target.noise().mean())?;
    let d = target.data();
    let dim = d.len();
    let eps = target.prior().spike_width;
    let shape = match config.initial_scale {
        Some(s) => LowerTriangular::scaled_identity(dim, s),
        None if d.details().iter().all(|x| x.abs() <= eps) => {
            let coarse = 0.1 * target.noise().std_dev();
            let detail = 0.5 * eps;
            let mut diag = vec![0.0; dim * dim];
            for i in 0..dim {
                let mut scale = coarse;
                if let Some(lp) = d.level_of(i).and_then(|j| target.prior().level(j)) {
                    if lp.alpha > 0.0 {
                        scale = scale.min(detail);
                    }
                    if let TailFamily::Beta { m, .. } = lp.tail {
                        scale = scale.min(0.5 * m);
                    }
                }
                diag[i * dim + i] = scale;
            }
            LowerTriangular::from_dense(dim, &diag)
        }
        None => LowerTriangular::scaled_identity(dim, default_initial_scale(target)),
    };
    run_chain_with_shape(target, start.into_vec(), shape, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Isotropic(usize);

    impl Target for Isotropic {
        fn dim(&self) -> usize {
            self.0
        }

        fn log_density(&self, x: &[f64]) -> f64 {
            -0.5 * x.iter().map(|v| v * v).sum::<f64>()
        }
    }

    struct HalfSpace;

    impl Target for HalfSpace {
        fn dim(&self) -> usize {
            2
        }

        fn log_density(&self, x: &[f64]) -> f64 {
            if x[0] < 0.0 {
                f64::NEG_INFINITY
            } else {
                -0.5 * (x[0] * x[0] + x[1] * x[1])
            }
        }
    }

    #[test]
    fn adaptation_schedule() {
        assert_eq!(adaptation_step(10, 1), 1.0);
        assert!((adaptation_step(2, 1000) - 0.02).abs() < 1e-12);
        assert!(adaptation_step(3, 1 << 40) < 1e-6);
    }

    #[test]
    fn acceptance_equal_to_target_leaves_shape() {
        // density ratio from the origin to anywhere else is exactly gamma
        struct Plateau(f64);
        impl Target for Plateau {
            fn dim(&self) -> usize {
                3
            }
            fn log_density(&self, x: &[f64]) -> f64 {
                if x.iter().all(|&v| v == 0.0) {
                    0.0
                } else {
                    self.0.ln()
                }
            }
        }
        let config = RamConfig::default();
        let target = Plateau(config.target_acceptance);
        let shape = LowerTriangular::scaled_identity(3, 0.7);
        let mut state = ChainState::new(&target, vec![0.0; 3], shape.clone()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let info = ram_step(&mut state, &target, &config, &mut rng);
        assert!((info.acceptance_probability - config.target_acceptance).abs() < 1e-15);
        for (a, b) in state.shape.gram().iter().zip(shape.gram()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn off_support_proposal_is_rejected_and_shrinks() {
        let config = RamConfig::default();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        // start at the boundary so roughly half the proposals leave the support
        let mut state = ChainState::new(&HalfSpace, vec![1e-9, 0.0], LowerTriangular::scaled_identity(2, 1.0)).unwrap();
        let mut seen = false;
        for _ in 0..50 {
            let before = state.clone();
            let info = ram_step(&mut state, &HalfSpace, &config, &mut rng);
            if before.theta[0] + before.shape.mul_vec(&info.direction)[0] < 0.0 {
                seen = true;
                assert!(!info.accepted);
                assert_eq!(info.acceptance_probability, 0.0);
                assert_eq!(state.theta, before.theta);
                // variance along S u decreases
                let su = before.shape.mul_vec(&info.direction);
                let quad = |g: &[f64]| {
                    (0..2)
                        .map(|i| (0..2).map(|j| su[i] * g[i * 2 + j] * su[j]).sum::<f64>())
                        .sum::<f64>()
                };
                assert!(quad(&state.shape.gram()) < quad(&before.shape.gram()));
                break;
            }
        }
        assert!(seen);
    }

    #[test]
    fn chain_is_deterministic() {
        let config = RamConfig {
            iterations: 500,
            burn_in: 50,
            initial_scale: Some(1.0),
            seed: 99,
            ..RamConfig::default()
        };
        let a = run_chain(&Isotropic(3), vec![0.0; 3], &config).unwrap();
        let b = run_chain(&Isotropic(3), vec![0.0; 3], &config).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.draws.rows(), 500);
    }

    #[test]
    fn rejects_inadmissible_start() {
        let config = RamConfig::default();
        assert!(matches!(
            run_chain(&HalfSpace, vec![-1.0, 0.0], &config),
            Err(Error::Initialization(_))
        ));
    }

    #[test]
    fn trace_rows_match_iterations() {
        let config = RamConfig {
            iterations: 20,
            burn_in: 5,
            initial_scale: Some(1.0),
            record_trace: true,
            ..RamConfig::default()
        };
        let out = run_chain(&Isotropic(2), vec![0.0; 2], &config).unwrap();
        let trace = out.trace.unwrap();
        assert_eq!(trace.len(), 25);
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("iteration,accepted,log_posterior\n1,"));
    }
}
