use alloc::vec;

use nalgebra::{DMatrix, DVector};

use super::logistic::require_labels;
use crate::data::{Dataset, FitResult};
use crate::error::{Error, Result};

/// Fisher's linear discriminant with pooled covariance and equal priors.
pub fn fit_lda(data: &Dataset) -> Result<FitResult> {
    require_labels(data)?;
    let p = data.p();
    let mut mean = [DVector::zeros(p), DVector::zeros(p)];
    let mut count = [0usize; 2];
    for i in 0..data.n() {
        let c = usize::from(data.y()[i] > 0.0);
        mean[c] += data.x().row(i).transpose();
        count[c] += 1;
    }
    if count[0] == 0 || count[1] == 0 {
        return Err(Error::InvalidData("both classes must be present".into()));
    }
    for c in 0..2 {
        mean[c] /= count[c] as f64;
    }
    let mut pooled = DMatrix::zeros(p, p);
    for i in 0..data.n() {
        let c = usize::from(data.y()[i] > 0.0);
        let d = data.x().row(i).transpose() - &mean[c];
        pooled += &d * d.transpose();
    }
    pooled /= (data.n() - 2).max(1) as f64;
    let chol = pooled.cholesky().ok_or(Error::RankDeficient)?;
    let beta = chol.solve(&(&mean[1] - &mean[0]));
    let intercept = -0.5 * beta.dot(&(&mean[1] + &mean[0]));
    Ok(FitResult {
        beta,
        intercept,
        gamma: None,
        objective_trace: vec![],
        iterations: 1,
        converged: true,
        lambda_beta: 0.0,
        lambda_gamma: None,
    })
}
