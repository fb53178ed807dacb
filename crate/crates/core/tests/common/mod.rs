//! Independent reference implementations used as test oracles. Nothing here
//! calls into the crate's transform, likelihood or threshold code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()
}

/// Row-major `n x n` matrix of the periodized transform, built as the
/// product of one explicit analysis matrix per pyramid step.
pub fn dense_dwt_matrix(low: &[f64], n: usize, primary_level: usize) -> Vec<f64> {
    let len = low.len();
    let high: Vec<f64> = (0..len)
        .map(|l| {
            if l % 2 == 0 {
                low[len - 1 - l]
            } else {
                -low[len - 1 - l]
            }
        })
        .collect();
    // rows of W are accumulated as: detail rows (finest first), then coarse
    let mut current: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut detail_blocks: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut m = n;
    while m > (1 << primary_level) {
        let half = m / 2;
        let mut lo_rows = vec![vec![0.0; n]; half];
        let mut hi_rows = vec![vec![0.0; n]; half];
        for k in 0..half {
            for l in 0..len {
                let src = (2 * k + l) % m;
                for c in 0..n {
                    lo_rows[k][c] += low[l] * current[src][c];
                    hi_rows[k][c] += high[l] * current[src][c];
                }
            }
        }
        detail_blocks.push(hi_rows);
        current = lo_rows;
        m = half;
    }
    let mut w = Vec::with_capacity(n * n);
    for row in &current {
        w.extend_from_slice(row);
    }
    for block in detail_blocks.iter().rev() {
        for row in block {
            w.extend_from_slice(row);
        }
    }
    w
}

pub fn mat_vec(m: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| (0..n).map(|j| m[i * n + j] * x[j]).sum()).collect()
}

pub fn mat_t_vec(m: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| (0..n).map(|j| m[j * n + i] * x[j]).sum()).collect()
}

#[derive(Debug, Clone, Copy)]
pub enum OracleNoise {
    Exp(f64),
    LogNormal(f64),
}

#[derive(Debug, Clone, Copy)]
pub enum OracleTail {
    Logistic(f64),
    Beta(f64, f64, f64),
}

fn gamma_fn(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn oracle_tail_density(tail: OracleTail, t: f64) -> f64 {
    match tail {
        OracleTail::Logistic(tau) => {
            let z = (-t / tau).exp();
            if z.is_infinite() {
                return 0.0;
            }
            z / (tau * (1.0 + z) * (1.0 + z))
        }
        OracleTail::Beta(a, b, m) => {
            if t < -m || t > m {
                return 0.0;
            }
            let beta_fn = gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b);
            (t + m).powf(a - 1.0) * (m - t).powf(b - 1.0) / ((2.0 * m).powf(a + b - 1.0) * beta_fn)
        }
    }
}

pub fn oracle_prior_density(alpha: f64, tail: OracleTail, eps: f64, t: f64) -> f64 {
    let spike = if t.abs() <= eps { 1.0 / (2.0 * eps) } else { 0.0 };
    alpha * spike + (1.0 - alpha) * oracle_tail_density(tail, t)
}

/// Straight-line evaluation of the joint log posterior: residuals by the
/// dense `W^T (d - theta)`, likelihood product and per-detail prior product.
pub fn oracle_log_posterior(
    w: &[f64],
    n: usize,
    primary_level: usize,
    d: &[f64],
    theta: &[f64],
    noise: OracleNoise,
    alphas: &[f64],
    tails: &[OracleTail],
    eps: f64,
) -> f64 {
    let diff: Vec<f64> = d.iter().zip(theta).map(|(a, b)| a - b).collect();
    let e = mat_t_vec(w, n, &diff);
    if e.iter().any(|&x| x <= 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut lp = 0.0;
    for &x in &e {
        lp += match noise {
            OracleNoise::Exp(lambda) => (lambda * (-lambda * x).exp()).ln(),
            OracleNoise::LogNormal(s) => {
                let dens = (-(x.ln().powi(2)) / (2.0 * s * s)).exp() / (x * s * (2.0 * std::f64::consts::PI).sqrt());
                dens.ln()
            }
        };
    }
    for (j, &t) in theta.iter().enumerate().skip(1 << primary_level) {
        let level = (usize::BITS - 1 - j.leading_zeros()) as usize;
        let k = level - primary_level;
        lp += oracle_prior_density(alphas[k], tails[k], eps, t).ln();
    }
    lp
}

/// Direct SURE risk at threshold `t`.
pub fn sure_risk(level: &[f64], sigma: f64, t: f64) -> f64 {
    let n = level.len() as f64;
    let below = level.iter().filter(|x| x.abs() <= t).count() as f64;
    n * sigma * sigma + level.iter().map(|x| x.min(t).max(-t).powi(2)).sum::<f64>() - 2.0 * sigma * sigma * below
}

/// Exhaustive scan over `{0} U |d|`; smallest minimizer.
pub fn sure_brute_force(level: &[f64], sigma: f64) -> f64 {
    let mut candidates: Vec<f64> = std::iter::once(0.0).chain(level.iter().map(|x| x.abs())).collect();
    candidates.sort_by(f64::total_cmp);
    let mut best = (f64::INFINITY, 0.0);
    for &t in &candidates {
        let r = sure_risk(level, sigma, t);
        if best.0.is_infinite() || r < best.0 - 1e-12 * best.0.abs().max(1.0) {
            best = (r, t);
        }
    }
    best.1
}

/// Largest `k` (1-based) with `p_(k) <= k q / M`.
pub fn bh_brute_force(p: &[f64], q: f64) -> Option<usize> {
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    (1..=sorted.len()).rev().find(|&k| sorted[k - 1] <= k as f64 * q / m)
}

/// Standard error of the mean from non-overlapping batch means.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Gaussian log density (up to a constant) from a mean and a row-major
/// precision matrix.
pub struct Gaussian {
    pub dim: usize,
    pub mean: Vec<f64>,
    pub prec: Vec<f64>,
}

impl Gaussian {
    pub fn isotropic(dim: usize) -> Self {
        let mut prec = vec![0.0; dim * dim];
        for i in 0..dim {
            prec[i * dim + i] = 1.0;
        }
        Self {
            dim,
            mean: vec![0.0; dim],
            prec,
        }
    }

    /// From a covariance matrix, inverted by Gauss-Jordan elimination.
    pub fn with_covariance(mean: Vec<f64>, cov: &[f64]) -> Self {
        let dim = mean.len();
        let mut a = cov.to_vec();
        let mut inv = vec![0.0; dim * dim];
        for i in 0..dim {
            inv[i * dim + i] = 1.0;
        }
        for c in 0..dim {
            let p = a[c * dim + c];
            for j in 0..dim {
                a[c * dim + j] /= p;
                inv[c * dim + j] /= p;
            }
            for r in 0..dim {
                if r != c {
                    let f = a[r * dim + c];
                    for j in 0..dim {
                        a[r * dim + j] -= f * a[c * dim + j];
                        inv[r * dim + j] -= f * inv[c * dim + j];
                    }
                }
            }
        }
        Self { dim, mean, prec: inv }
    }
}

impl poswave::ram::Target for Gaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let mut q = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                q += z[i] * self.prec[i * self.dim + j] * z[j];
            }
        }
        -0.5 * q
    }
}

/// Composite Simpson rule on `[a, b]` with `panels` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
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
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}
