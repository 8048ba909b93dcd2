use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::logistic::{fit_margin, require_labels};
use super::{first_penalized, result_from_theta, SolverConfig};
use crate::data::{Dataset, FitResult};
use crate::error::{Error, Result};
use crate::losses::{positive_part, ArgumentKind, EffectiveLossSpec, GammaNorm, LossSpec};
use crate::newton::Problem;
use crate::tuning::lambda_from_bending_svm;

/// Hinge-type loss used by [`fit_svm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvmVariant {
    Hinge,
    SquaredHinge,
    /// Hinge with its corner smoothed by a quadratic on `(k, 1)`.
    Huberized(f64),
}

/// Smoothing levels for the exact hinge: the quadratic piece covers
/// `(1 − 1/λ, 1)` for `λ = 1, 10, …, 10⁷`.
const HINGE_STAGES: i32 = 8;

/// Linear SVM: `Σ loss(yᵢfᵢ) + (λ/2)‖β‖²`, intercept unpenalized.
pub fn fit_svm(data: &Dataset, variant: SvmVariant, lambda_beta: f64) -> Result<FitResult> {
    fit_svm_with(data, variant, lambda_beta, &SolverConfig::default())
}

pub fn fit_svm_with(data: &Dataset, variant: SvmVariant, lambda_beta: f64, cfg: &SolverConfig) -> Result<FitResult> {
    require_labels(data)?;
    if !(lambda_beta >= 0.0) {
        return Err(Error::Config(format!("lambda_beta must be nonnegative, got {lambda_beta}")));
    }
    match variant {
        SvmVariant::SquaredHinge => fit_margin(data, &LossSpec::SquaredHinge, lambda_beta, None, None, None, cfg),
        SvmVariant::Huberized(k) => {
            let lam = lambda_from_bending_svm(k)?;
            let spec = EffectiveLossSpec::new(LossSpec::Hinge, lam, GammaNorm::L2)?;
            let mut fit = fit_margin(data, &spec, lambda_beta, None, None, None, cfg)?;
            fit.lambda_gamma = Some(lam);
            Ok(fit)
        }
        SvmVariant::Hinge => {
            let design = data.design();
            let (theta, trace, iters) =
                hinge_continuation(&design, data.y().as_slice(), lambda_beta, first_penalized(data), None, None, cfg)?;
            Ok(result_from_theta(data, &theta, trace, iters, lambda_beta))
        }
    }
}

/// `Σ (1 − yᵢfᵢ − oᵢ)₊ + (λ/2)‖β‖²`.
pub(crate) fn hinge_objective(
    design: &DMatrix<f64>,
    y: &[f64],
    lambda_beta: f64,
    first_pen: usize,
    offsets: Option<&[f64]>,
    theta: &DVector<f64>,
) -> f64 {
    let f = design * theta;
    let data: f64 = (0..y.len())
        .map(|i| positive_part(1.0 - y[i] * f[i] - offsets.map_or(0.0, |o| o[i])))
        .sum();
    let pen: f64 = theta.iter().skip(first_pen).map(|t| t * t).sum();
    data + 0.5 * lambda_beta * pen
}

/// Exact hinge by continuation over Huberized hinges with a shrinking
/// quadratic piece, keeping the best iterate in hinge objective.
pub(crate) fn hinge_continuation(
    design: &DMatrix<f64>,
    y: &[f64],
    lambda_beta: f64,
    first_pen: usize,
    offsets: Option<&[f64]>,
    warm: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> Result<(DVector<f64>, Vec<f64>, usize)> {
    let mut theta = warm.cloned().unwrap_or_else(|| DVector::zeros(design.ncols()));
    let mut best = theta.clone();
    let mut best_obj = hinge_objective(design, y, lambda_beta, first_pen, offsets, &best);
    let mut trace = alloc::vec![best_obj];
    let mut iters = 0;
    for stage in 0..HINGE_STAGES {
        let spec = EffectiveLossSpec::new(LossSpec::Hinge, libm::pow(10.0, stage as f64), GammaNorm::L2)?;
        let problem = Problem {
            design,
            y,
            kind: ArgumentKind::Margin,
            loss: &spec,
            offsets,
            weights: None,
            ridge: lambda_beta,
            first_penalized: first_pen,
        };
        let out = problem.minimize(theta, cfg)?;
        iters += out.iterations;
        theta = out.theta;
        let obj = hinge_objective(design, y, lambda_beta, first_pen, offsets, &theta);
        if obj < best_obj {
            best_obj = obj;
            best = theta.clone();
        }
        trace.push(best_obj);
    }
    Ok((best, trace, iters))
}
