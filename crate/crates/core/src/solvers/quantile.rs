use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::least_squares::ridge_solve;
use super::{result_from_theta, SolverConfig};
use crate::data::{Dataset, FitResult};
use crate::error::{Error, Result};
use crate::linalg::median;
use crate::losses::{check_loss, ArgumentKind, EffectiveLossSpec, GammaNorm, LossSpec, Quantile};
use crate::newton::Problem;


/// Quantile regression.
///
/// Without `effective` this minimizes `Σ ρ_q(yᵢ − x̃ᵢθ)`; with it, the
/// profiled loss `Σ ρ_q^γ(yᵢ − x̃ᵢθ)`.
pub fn fit_quantile(data: &Dataset, q: Quantile, effective: Option<&EffectiveLossSpec>) -> Result<FitResult> {
    fit_quantile_with(data, q, effective, None, &SolverConfig::default())
}

pub fn fit_quantile_with(
    data: &Dataset,
    q: Quantile,
    effective: Option<&EffectiveLossSpec>,
    warm: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    let design = data.design();
    let y = data.y().as_slice();
    let theta0 = match warm {
        Some(t) => t.clone(),
        None => ridge_solve(&design, data.y(), 0.0, 0).or_else(|_| ridge_solve(&design, data.y(), 1e-8, 0))?,
    };
    match effective {
        Some(spec) => {
            if spec.base() != LossSpec::Check(q) {
                return Err(Error::Config(format!(
                    "effective loss for quantile regression must be the check loss at q = {}",
                    q.get()
                )));
            }
            let problem = Problem {
                design: &design,
                y,
                kind: ArgumentKind::Residual,
                loss: spec,
                offsets: None,
                weights: None,
                ridge: 0.0,
                first_penalized: 0,
            };
            let out = problem.minimize(theta0, cfg)?;
            let mut fit = result_from_theta(data, &out.theta, out.trace, out.iterations, 0.0);
            fit.lambda_gamma = Some(spec.lambda_gamma());
            Ok(fit)
        }
        None => {
            let (theta, trace, iters) = solve_check(&design, y, q.get(), theta0, cfg)?;
            Ok(result_from_theta(data, &theta, trace, iters, 0.0))
        }
    }
}

pub(crate) fn quantile_objective(design: &DMatrix<f64>, y: &[f64], q: f64, theta: &DVector<f64>) -> f64 {
    let f = design * theta;
    y.iter().zip(f.iter()).map(|(yi, fi)| check_loss(q, yi - fi)).sum()
}

/// Standard quantile regression.
///
/// Minimizes the check loss smoothed over a band as wide as the residual
/// scale, then finishes exactly by basis exchange from the vertex nearest
/// to that fit. Returns `(θ, objective after each phase, Newton iterations)`.
pub(crate) fn solve_check(
    design: &DMatrix<f64>,
    y: &[f64],
    q: f64,
    theta0: DVector<f64>,
    cfg: &SolverConfig,
) -> Result<(DVector<f64>, Vec<f64>, usize)> {
    let quantile = Quantile::new(q)?;
    let resid = |t: &DVector<f64>| -> Vec<f64> {
        let f = design * t;
        y.iter().zip(f.iter()).map(|(a, b)| a - b).collect()
    };
    let r0 = resid(&theta0);
    let centre = median(&r0);
    let spread: Vec<f64> = r0.iter().map(|r| (r - centre).abs()).collect();
    let scale = median(&spread).max(r0.iter().fold(0.0_f64, |m, r| m.max(r.abs())) * 1e-3);

    let mut best = theta0;
    let mut best_obj = quantile_objective(design, y, q, &best);
    let mut trace = alloc::vec![best_obj];
    if scale == 0.0 {
        return Ok((best, trace, 0));
    }
    let spec = EffectiveLossSpec::new(LossSpec::Check(quantile), 1.0 / scale, GammaNorm::AsymmetricL2)?;
    let problem = Problem {
        design,
        y,
        kind: ArgumentKind::Residual,
        loss: &spec,
        offsets: None,
        weights: None,
        ridge: 0.0,
        first_penalized: 0,
    };
    let smooth = problem.minimize(best.clone(), cfg)?;
    let obj = quantile_objective(design, y, q, &smooth.theta);
    if obj < best_obj {
        best_obj = obj;
        best = smooth.theta;
    }
    trace.push(best_obj);
    if let Some(vertex) = vertex_descent(design, y, q, &resid(&best)) {
        let obj = quantile_objective(design, y, q, &vertex);
        if obj <= best_obj {
            best_obj = obj;
            best = vertex;
            trace.push(best_obj);
        }
    }
    Ok((best, trace, smooth.iterations))
}

/// Nonsingular set of `d` cases taken greedily in order of `|r|`.
fn initial_basis(design: &DMatrix<f64>, r: &[f64]) -> Option<Vec<usize>> {
    let d = design.ncols();
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()));
    let mut basis = Vec::with_capacity(d);
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(d);
    for i in order {
        let row = design.row(i).transpose();
        let norm = row.norm();
        let mut v = row;
        for u in &ortho {
            let c = u.dot(&v);
            v.axpy(-c, u, 1.0);
        }
        let rest = v.norm();
        if rest > 1e-6 * norm {
            ortho.push(v / rest);
            basis.push(i);
            if basis.len() == d {
                return Some(basis);
            }
        }
    }
    None
}

/// Exact minimizer of `Σ ρ_q(yᵢ − x̃ᵢθ)` by basis exchange: from a vertex,
/// release the basic case whose dual value leaves `[q − 1, q]` and move
/// along the edge to the breakpoint where the directional slope turns
/// nonnegative.
fn vertex_descent(design: &DMatrix<f64>, y: &[f64], q: f64, r0: &[f64]) -> Option<DVector<f64>> {
    let (n, d) = design.shape();
    let mut basis = initial_basis(design, r0)?;
    let row_norms: Vec<f64> = design.row_iter().map(|row| row.norm()).collect();
    let mut in_basis = alloc::vec![false; n];
    for &i in &basis {
        in_basis[i] = true;
    }
    for _ in 0..(20 * n + 100) {
        let xb = design.select_rows(basis.iter());
        let inv = xb.try_inverse()?;
        let yb = DVector::from_iterator(d, basis.iter().map(|&i| y[i]));
        let theta = &inv * yb;
        let f = design * &theta;
        let r: Vec<f64> = (0..n).map(|i| if in_basis[i] { 0.0 } else { y[i] - f[i] }).collect();
        let mut s = DVector::zeros(d);
        for i in (0..n).filter(|&i| !in_basis[i]) {
            let psi = if r[i] >= 0.0 { q } else { q - 1.0 };
            s.axpy(psi, &design.row(i).transpose(), 1.0);
        }
        let a = -(inv.transpose() * s);
        let (j, viol) = a
            .iter()
            .map(|&v| (q - 1.0 - v).max(v - q))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |m, (k, v)| if v > m.1 { (k, v) } else { m });
        if viol <= 1e-10 {
            return Some(theta);
        }
        let dir = if a[j] < q - 1.0 { 1.0 } else { -1.0 };
        let delta = inv.column(j) * dir;
        let mut slope = dir * a[j] + if dir > 0.0 { 1.0 - q } else { q };
        let z = design * &delta;
        let z_floor = 1e-10 * delta.norm();
        let mut breaks: Vec<(f64, usize)> = (0..n)
            .filter(|&i| !in_basis[i] && z[i].abs() > z_floor * row_norms[i] && r[i] * z[i] >= 0.0)
            .map(|i| (r[i] / z[i], i))
            .collect();
        breaks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let entering = breaks.iter().find(|&&(_, i)| {
            slope += z[i].abs();
            slope >= 0.0
        })?;
        in_basis[basis[j]] = false;
        in_basis[entering.1] = true;
        basis[j] = entering.1;
    }
    None
}
