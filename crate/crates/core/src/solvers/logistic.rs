use alloc::format;

use nalgebra::DVector;

use super::{first_penalized, result_from_theta, SolverConfig};
use crate::data::{Dataset, FitResult, ResponseKind};
use crate::error::{Error, Result};
use crate::losses::{ArgumentKind, EffectiveLossSpec, GammaNorm, LossSpec};
use crate::newton::{Problem, ScalarLoss};
use crate::tuning::lambda_from_bending_logistic;

/// Logistic regression, plain or with the deviance linearized below the
/// bending constant `k` (slope `−1/(1+eᵏ)`).
pub fn fit_logistic(data: &Dataset, linearized: Option<f64>) -> Result<FitResult> {
    fit_logistic_with(data, linearized, 0.0, &SolverConfig::default())
}

/// As [`fit_logistic`] with a ridge penalty `(λ/2)‖β‖²`.
pub fn fit_logistic_with(
    data: &Dataset,
    linearized: Option<f64>,
    lambda_beta: f64,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    match linearized {
        None => fit_margin(data, &LossSpec::LogisticDeviance, lambda_beta, None, None, None, cfg),
        Some(k) => {
            let lam = lambda_from_bending_logistic(k);
            let spec = EffectiveLossSpec::new(LossSpec::LogisticDeviance, lam, GammaNorm::L1)?;
            let mut fit = fit_margin(data, &spec, lambda_beta, None, None, None, cfg)?;
            fit.lambda_gamma = Some(lam);
            Ok(fit)
        }
    }
}

pub(crate) fn require_labels(data: &Dataset) -> Result<()> {
    if data.response_kind() != ResponseKind::BinaryPM1 {
        return Err(Error::InvalidData("classification needs a -1/+1 response".into()));
    }
    Ok(())
}

/// Newton–Armijo on `Σ wᵢ φ(yᵢfᵢ + oᵢ) + (λ/2)‖β‖²`.
pub(crate) fn fit_margin<L: ScalarLoss>(
    data: &Dataset,
    loss: &L,
    lambda_beta: f64,
    offsets: Option<&[f64]>,
    weights: Option<&[f64]>,
    warm: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    require_labels(data)?;
    if !(lambda_beta >= 0.0) {
        return Err(Error::Config(format!("lambda_beta must be nonnegative, got {lambda_beta}")));
    }
    let design = data.design();
    let problem = Problem {
        design: &design,
        y: data.y().as_slice(),
        kind: ArgumentKind::Margin,
        loss,
        offsets,
        weights,
        ridge: lambda_beta,
        first_penalized: first_penalized(data),
    };
    let theta0 = warm.cloned().unwrap_or_else(|| DVector::zeros(data.dim()));
    let out = problem.minimize(theta0, cfg)?;
    Ok(result_from_theta(data, &out.theta, out.trace, out.iterations, lambda_beta))
}
