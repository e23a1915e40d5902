//! Non-negative lasso with an unpenalised intercept, solved by covariance-form
//! coordinate descent, plus K-fold selection of the penalty.
//!
//! Objective in original units:
//! `(1/2n) ||y - b0 - X w||^2 + lambda * sum(w)`, `w >= 0`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_SWEEPS: usize = 100_000;
pub const COEF_TOL: f64 = 1e-9;
pub const CV_GRID_SIZE: usize = 100;
pub const CV_GRID_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoModel<T> {
    pub intercept: T,
    pub weights: Vec<T>,
    pub lambda: T,
    pub sweeps: usize,
    pub converged: bool,
}

impl<T: Scalar> LassoModel<T> {
    pub fn predict(&self, row: &[T]) -> T {
        self.intercept + row.iter().zip(&self.weights).map(|(&x, &w)| x * w).sum::<T>()
    }
}

/// Centred Gram form of the problem, in standardised column units.
struct Problem<T> {
    means: Vec<T>,
    sds: Vec<T>,
    ybar: T,
    /// `Z'Z / n`, row-major `p x p`.
    gram: Vec<T>,
    /// `Z'(y - ybar) / n`.
    corr: Vec<T>,
}

impl<T: Scalar> Problem<T> {
    fn new(x: &[Vec<T>], y: &[T], rows: &[usize]) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let n = rows.len();
        let nf = T::from_usize_lossy(n);
        let ybar = rows.iter().map(|&i| y[i]).sum::<T>() / nf;
        let means: Vec<T> = (0..p)
            .map(|m| rows.iter().map(|&i| x[i][m]).sum::<T>() / nf)
            .collect();
        let sds: Vec<T> = (0..p)
            .map(|m| {
                let v = rows.iter().map(|&i| (x[i][m] - means[m]).powi(2)).sum::<T>() / nf;
                let sd = v.sqrt();
                let scale = means[m].abs().max(T::one());
                if sd <= T::epsilon() * T::lit(64.0) * scale {
                    T::zero()
                } else {
                    sd
                }
            })
            .collect();
        let mut gram = vec![T::zero(); p * p];
        let mut corr = vec![T::zero(); p];
        let mut z = vec![T::zero(); p];
        for &i in rows {
            for m in 0..p {
                z[m] = if sds[m] > T::zero() {
                    (x[i][m] - means[m]) / sds[m]
                } else {
                    T::zero()
                };
            }
            let yc = y[i] - ybar;
            for a in 0..p {
                corr[a] += z[a] * yc;
                for b in a..p {
                    gram[a * p + b] += z[a] * z[b];
                }
            }
        }
        for a in 0..p {
            corr[a] /= nf;
            for b in a..p {
                let v = gram[a * p + b] / nf;
                gram[a * p + b] = v;
                gram[b * p + a] = v;
            }
        }
        Self {
            means,
            sds,
            ybar,
            gram,
            corr,
        }
    }

    fn p(&self) -> usize {
        self.means.len()
    }

    /// Smallest penalty at which every weight is zero.
    fn lambda_max(&self) -> T {
        (0..self.p())
            .map(|m| (self.corr[m] * self.sds[m]).max(T::zero()))
            .fold(T::zero(), T::max)
    }

    /// Coordinate descent from the warm start `gamma` (standardised units).
    fn solve(&self, lambda: T, gamma: &mut [T]) -> (usize, bool) {
        let p = self.p();
        let tol = T::lit(COEF_TOL).max(T::epsilon() * T::lit(16.0));
        let mut q = vec![T::zero(); p];
        for a in 0..p {
            for b in 0..p {
                q[a] += self.gram[a * p + b] * gamma[b];
            }
        }
        for sweep in 1..=MAX_SWEEPS {
            let mut max_change = T::zero();
            for m in 0..p {
                let diag = self.gram[m * p + m];
                if self.sds[m] == T::zero() || diag <= T::zero() {
                    gamma[m] = T::zero();
                    continue;
                }
                let rho = self.corr[m] - q[m] + diag * gamma[m];
                let new = ((rho - lambda / self.sds[m]) / diag).max(T::zero());
                let delta = new - gamma[m];
                if delta != T::zero() {
                    for a in 0..p {
                        q[a] += self.gram[a * p + m] * delta;
                    }
                    gamma[m] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < tol {
                return (sweep, true);
            }
        }
        (MAX_SWEEPS, false)
    }

    fn to_model(&self, lambda: T, gamma: &[T], sweeps: usize, converged: bool) -> LassoModel<T> {
        let weights: Vec<T> = gamma
            .iter()
            .zip(&self.sds)
            .map(|(&g, &sd)| if sd > T::zero() { g / sd } else { T::zero() })
            .collect();
        let intercept = self.ybar
            - weights
                .iter()
                .zip(&self.means)
                .map(|(&w, &mu)| w * mu)
                .sum::<T>();
        LassoModel {
            intercept,
            weights,
            lambda,
            sweeps,
            converged,
        }
    }
}

fn check_design<T: Scalar>(x: &[Vec<T>], y: &[T]) -> Result<usize> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "lasso design has {} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    let p = x[0].len();
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidInput("lasso design is empty or ragged".into()));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in lasso design".into()));
    }
    Ok(p)
}

/// Fits the non-negative lasso at a fixed penalty.
pub fn nnlasso_fit<T: Scalar>(x: &[Vec<T>], y: &[T], lambda: T) -> Result<LassoModel<T>> {
    let p = check_design(x, y)?;
    if !(lambda >= T::zero()) {
        return Err(Error::InvalidInput("lasso penalty must be non-negative".into()));
    }
    let rows: Vec<usize> = (0..x.len()).collect();
    let prob = Problem::new(x, y, &rows);
    let mut gamma = vec![T::zero(); p];
    let (sweeps, converged) = prob.solve(lambda, &mut gamma);
    if !converged {
        log::warn!("lasso coordinate descent hit {MAX_SWEEPS} sweeps at lambda {lambda}");
    }
    Ok(prob.to_model(lambda, &gamma, sweeps, converged))
}

/// Penalised objective of arbitrary coefficients.
pub fn lasso_objective<T: Scalar>(x: &[Vec<T>], y: &[T], intercept: T, weights: &[T], lambda: T) -> T {
    let n = T::from_usize_lossy(y.len());
    let rss: T = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit = intercept + row.iter().zip(weights).map(|(&a, &w)| a * w).sum::<T>();
            (yi - fit).powi(2)
        })
        .sum();
    rss / (T::lit(2.0) * n) + lambda * weights.iter().map(|w| w.abs()).sum::<T>()
}

/// Largest violation of the optimality conditions, including the intercept's.
pub fn kkt_residual<T: Scalar>(x: &[Vec<T>], y: &[T], model: &LassoModel<T>) -> T {
    let n = T::from_usize_lossy(y.len());
    let resid: Vec<T> = x.iter().zip(y).map(|(row, &yi)| yi - model.predict(row)).collect();
    let mut worst = (resid.iter().copied().sum::<T>() / n).abs();
    for (m, &w) in model.weights.iter().enumerate() {
        let grad = -x.iter().zip(&resid).map(|(row, &r)| row[m] * r).sum::<T>() / n;
        let v = if w > T::zero() {
            (grad + model.lambda).abs()
        } else {
            (-(grad + model.lambda)).max(T::zero())
        };
        worst = worst.max(v);
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoCv<T> {
    pub lambdas: Vec<T>,
    /// Mean held-out squared error per grid value.
    pub cv_errors: Vec<T>,
    pub lambda: T,
    pub model: LassoModel<T>,
    pub folds: usize,
}

fn lambda_grid<T: Scalar>(lambda_max: T) -> Vec<T> {
    let top = if lambda_max > T::zero() {
        lambda_max
    } else {
        T::lit(1e-8)
    };
    let ratio = T::lit(CV_GRID_RATIO);
    let last = T::from_usize_lossy(CV_GRID_SIZE - 1);
    (0..CV_GRID_SIZE)
        .map(|i| top * ratio.powf(T::from_usize_lossy(i) / last))
        .collect()
}

/// Selects the penalty by `folds`-fold cross-validation over a log-spaced
/// grid and refits on all rows.
pub fn nnlasso_cv<T: Scalar>(x: &[Vec<T>], y: &[T], folds: usize, seed: u64) -> Result<LassoCv<T>> {
    let p = check_design(x, y)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput("cross-validation needs at least two rows".into()));
    }
    let k = folds.clamp(2, n);
    if k < folds {
        log::warn!("only {n} rows: using {k}-fold cross-validation");
    }
    let all: Vec<usize> = (0..n).collect();
    let full = Problem::new(x, y, &all);
    let lambdas = lambda_grid(full.lambda_max());

    let mut order = all.clone();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % k;
    }

    let mut sums = vec![T::zero(); lambdas.len()];
    for f in 0..k {
        let train: Vec<usize> = all.iter().copied().filter(|&i| fold_of[i] != f).collect();
        let held: Vec<usize> = all.iter().copied().filter(|&i| fold_of[i] == f).collect();
        let prob = Problem::new(x, y, &train);
        let mut gamma = vec![T::zero(); p];
        for (li, &lambda) in lambdas.iter().enumerate() {
            let (sweeps, converged) = prob.solve(lambda, &mut gamma);
            let model = prob.to_model(lambda, &gamma, sweeps, converged);
            let err = held.iter().map(|&i| (y[i] - model.predict(&x[i])).powi(2)).sum::<T>()
                / T::from_usize_lossy(held.len());
            sums[li] += err;
        }
    }
    let cv_errors: Vec<T> = sums.iter().map(|&s| s / T::from_usize_lossy(k)).collect();
    let best = cv_errors
        .iter()
        .enumerate()
        .fold(0, |b, (i, e)| if *e < cv_errors[b] { i } else { b });
    let lambda = lambdas[best];

    let mut gamma = vec![T::zero(); p];
    let mut last = (0, true);
    for &l in &lambdas[..=best] {
        last = full.solve(l, &mut gamma);
    }
    if !last.1 {
        log::warn!("lasso coordinate descent hit {MAX_SWEEPS} sweeps at lambda {lambda}");
    }
    let model = full.to_model(lambda, &gamma, last.0, last.1);
    Ok(LassoCv {
        lambdas,
        cv_errors,
        lambda,
        model,
        folds: k,
    })
}
