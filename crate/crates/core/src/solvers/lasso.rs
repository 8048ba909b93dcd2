use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::SolverConfig;
use crate::case_adjust::soft_threshold;
use crate::data::{Dataset, FitResult};
use crate::error::{Error, Result};

/// Lasso fits along a descending grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    pub betas: Vec<DVector<f64>>,
    pub intercepts: Vec<f64>,
    pub df: Vec<usize>,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Centered cross products of a design, reused across penalty levels.
struct Centered {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    x_mean: DVector<f64>,
    y_mean: f64,
}

impl Centered {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>, intercept: bool) -> Self {
        let n = x.nrows() as f64;
        let (x_mean, y_mean) = if intercept {
            (DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n)), y.sum() / n)
        } else {
            (DVector::zeros(x.ncols()), 0.0)
        };
        let mut xc = x.clone();
        for (j, mut col) in xc.column_iter_mut().enumerate() {
            col.add_scalar_mut(-x_mean[j]);
        }
        let yc = y.add_scalar(-y_mean);
        Self { gram: xc.tr_mul(&xc), xty: xc.tr_mul(&yc), x_mean, y_mean }
    }

    /// Largest KKT violation of `β` at penalty `λ`, given `Gβ`.
    fn kkt_violation(&self, beta: &DVector<f64>, gb: &DVector<f64>, lambda: f64) -> f64 {
        (0..beta.len())
            .map(|j| {
                let grad = gb[j] - self.xty[j];
                if beta[j] == 0.0 {
                    (grad.abs() - lambda).max(0.0)
                } else {
                    (grad + lambda * beta[j].signum()).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    fn solve(&self, lambda: f64, mut beta: DVector<f64>, cfg: &SolverConfig) -> Result<(DVector<f64>, usize)> {
        let p = beta.len();
        let mut gb = &self.gram * &beta;
        for sweep in 0..cfg.max_iter {
            if self.kkt_violation(&beta, &gb, lambda) <= cfg.kkt_tol {
                return Ok((beta, sweep));
            }
            for j in 0..p {
                let gjj = self.gram[(j, j)];
                if gjj <= 0.0 {
                    continue;
                }
                let partial = self.xty[j] - (gb[j] - gjj * beta[j]);
                let new = soft_threshold(partial, lambda) / gjj;
                let delta = new - beta[j];
                if delta != 0.0 {
                    gb.axpy(delta, &self.gram.column(j), 1.0);
                    beta[j] = new;
                }
            }
            // Cheap refresh against drift in the running product.
            if sweep % 64 == 63 {
                gb = &self.gram * &beta;
            }
        }
        Err(Error::NonConvergence { iterations: cfg.max_iter, trace: Vec::new() })
    }

    fn intercept(&self, beta: &DVector<f64>) -> f64 {
        self.y_mean - self.x_mean.dot(beta)
    }
}

/// Smallest penalty at which the lasso solution is identically zero.
pub fn lambda_max(data: &Dataset) -> f64 {
    Centered::new(data.x(), data.y(), data.intercept()).xty.amax()
}

fn lasso_objective(data: &Dataset, target: &DVector<f64>, beta: &DVector<f64>, b0: f64, lambda: f64) -> f64 {
    let mut r = target - data.x() * beta;
    r.add_scalar_mut(-b0);
    0.5 * r.norm_squared() + lambda * beta.lp_norm(1)
}

/// Single-penalty lasso fit for an arbitrary target, warm-started at `warm`.
pub(crate) fn lasso_step(
    data: &Dataset,
    target: &DVector<f64>,
    lambda: f64,
    warm: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> Result<(DVector<f64>, f64, usize)> {
    let c = Centered::new(data.x(), target, data.intercept());
    let start = warm.cloned().unwrap_or_else(|| DVector::zeros(data.p()));
    let (beta, iters) = c.solve(lambda, start, cfg)?;
    let b0 = c.intercept(&beta);
    Ok((beta, b0, iters))
}

/// `½‖y − β₀ − Xβ‖² + λ‖β‖₁` by cyclic coordinate descent.
pub fn fit_lasso(data: &Dataset, lambda: f64, warm: Option<&DVector<f64>>, cfg: &SolverConfig) -> Result<FitResult> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lasso penalty must be nonnegative, got {lambda}")));
    }
    let (beta, b0, iters) = lasso_step(data, data.y(), lambda, warm, cfg)?;
    let obj = lasso_objective(data, data.y(), &beta, b0, lambda);
    Ok(FitResult {
        beta,
        intercept: b0,
        gamma: None,
        objective_trace: vec![obj],
        iterations: iters,
        converged: true,
        lambda_beta: lambda,
        lambda_gamma: None,
    })
}

/// Warm-started coordinate descent along a strictly descending grid.
pub fn fit_lasso_path(data: &Dataset, lambda_grid: &[f64]) -> Result<LassoPath> {
    fit_lasso_path_with(data, lambda_grid, &SolverConfig::default())
}

pub fn fit_lasso_path_with(data: &Dataset, lambda_grid: &[f64], cfg: &SolverConfig) -> Result<LassoPath> {
    if lambda_grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    if lambda_grid.iter().any(|&l| !(l > 0.0)) || lambda_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("lambda grid must be positive and strictly descending".into()));
    }
    let c = Centered::new(data.x(), data.y(), data.intercept());
    let mut beta = DVector::zeros(data.p());
    let mut path = LassoPath { lambdas: lambda_grid.to_vec(), betas: Vec::new(), intercepts: Vec::new(), df: Vec::new() };
    for &lambda in lambda_grid {
        beta = c.solve(lambda, beta, cfg)?.0;
        path.intercepts.push(c.intercept(&beta));
        path.df.push(beta.iter().filter(|b| **b != 0.0).count());
        path.betas.push(beta.clone());
    }
    Ok(path)
}

/// `Σ huber_k(yᵢ − β₀ − xᵢβ) + λ‖β‖₁` by coordinate descent on the
/// unit-curvature quadratic majorizer of each coordinate.
pub(crate) fn huber_lasso(data: &Dataset, k: f64, lambda: f64, cfg: &SolverConfig) -> Result<FitResult> {
    let x = data.x();
    let (n, p) = (data.n(), data.p());
    let psi = |r: f64| r.clamp(-k, k);
    let col_ss: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let mut beta = DVector::zeros(p);
    let mut b0 = if data.intercept() { crate::linalg::median(data.y().as_slice()) } else { 0.0 };
    let mut r: Vec<f64> = data.y().iter().map(|y| y - b0).collect();
    let objective = |r: &[f64], beta: &DVector<f64>| {
        r.iter().map(|&ri| crate::losses::huber(k, ri)).sum::<f64>() + lambda * beta.lp_norm(1)
    };
    let mut trace = vec![objective(&r, &beta)];
    for sweep in 0..cfg.max_iter * 10 {
        let mut violation: f64 = 0.0;
        if data.intercept() {
            let g: f64 = r.iter().map(|&ri| psi(ri)).sum();
            violation = violation.max(g.abs());
            let delta = g / n as f64;
            b0 += delta;
            r.iter_mut().for_each(|ri| *ri -= delta);
        }
        for j in 0..p {
            if col_ss[j] == 0.0 {
                continue;
            }
            let g: f64 = (0..n).map(|i| psi(r[i]) * x[(i, j)]).sum();
            violation = violation.max(if beta[j] == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * beta[j].signum()).abs()
            });
            let new = soft_threshold(beta[j] * col_ss[j] + g, lambda) / col_ss[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                for i in 0..n {
                    r[i] -= delta * x[(i, j)];
                }
                beta[j] = new;
            }
        }
        trace.push(objective(&r, &beta));
        if violation <= cfg.kkt_tol {
            return Ok(FitResult {
                beta,
                intercept: b0,
                gamma: None,
                objective_trace: trace,
                iterations: sweep + 1,
                converged: true,
                lambda_beta: lambda,
                lambda_gamma: Some(k),
            });
        }
    }
    Err(Error::NonConvergence { iterations: cfg.max_iter * 10, trace })
}

/// `count` log-spaced values from `hi` down to `hi·ratio`.
pub fn log_grid(hi: f64, ratio: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let step = libm::log(ratio) / (count - 1) as f64;
    (0..count).map(|k| hi * libm::exp(step * k as f64)).collect()
}
