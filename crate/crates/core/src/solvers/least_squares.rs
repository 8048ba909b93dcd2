use alloc::vec;

use nalgebra::{DMatrix, DVector};

use super::{first_penalized, result_from_theta};
use crate::data::{Dataset, FitResult};
use crate::error::{Error, Result};

/// Least squares, or ridge when `lambda_beta > 0`:
/// `½‖y − β₀ − Xβ‖² + (λ/2)‖β‖²`.
pub fn fit_least_squares(data: &Dataset, lambda_beta: f64) -> Result<FitResult> {
    if !(lambda_beta >= 0.0) {
        return Err(Error::Config("lambda_beta must be nonnegative".into()));
    }
    let design = data.design();
    let theta = ridge_solve(&design, data.y(), lambda_beta, first_penalized(data))?;
    let r = data.y() - &design * &theta;
    let pen: f64 = theta.iter().skip(first_penalized(data)).map(|t| t * t).sum();
    let obj = 0.5 * r.norm_squared() + 0.5 * lambda_beta * pen;
    Ok(result_from_theta(data, &theta, vec![obj], 1, lambda_beta))
}

/// Solves the (ridge) normal equations for an arbitrary target.
pub(crate) fn ridge_solve(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    lambda: f64,
    first_pen: usize,
) -> Result<DVector<f64>> {
    let mut gram = design.tr_mul(design);
    for j in first_pen..gram.nrows() {
        gram[(j, j)] += lambda;
    }
    let scale = gram.diagonal().max().max(1e-300);
    let chol = gram.cholesky().ok_or(Error::RankDeficient)?;
    let lmin = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if lmin * lmin <= 1e-13 * scale {
        return Err(Error::RankDeficient);
    }
    Ok(chol.solve(&design.tr_mul(target)))
}
