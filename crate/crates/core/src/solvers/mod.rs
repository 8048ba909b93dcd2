//! Baseline fitters. Each takes a [`Dataset`] and returns a [`FitResult`];
//! all of them are also the inner step of the alternating algorithm.

mod lasso;
mod lda;
mod least_squares;
mod logistic;
mod quantile;
mod svm;

pub use lasso::{fit_lasso, fit_lasso_path, fit_lasso_path_with, lambda_max, log_grid, LassoPath};
pub use lda::fit_lda;
pub use least_squares::fit_least_squares;
pub use logistic::{fit_logistic, fit_logistic_with};
pub use quantile::{fit_quantile, fit_quantile_with};
pub use svm::{fit_svm, fit_svm_with, SvmVariant};

pub(crate) use lasso::{huber_lasso, lasso_step};
pub(crate) use least_squares::ridge_solve as least_squares_target;
pub(crate) use logistic::{fit_margin, require_labels};
pub(crate) use quantile::solve_check;
pub(crate) use svm::hinge_continuation;

use nalgebra::DVector;

use crate::data::{Dataset, FitResult};

/// Tolerances and iteration caps shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Relative objective change.
    pub obj_tol: f64,
    /// Gradient sup-norm, relative to `1 + |objective|`.
    pub grad_tol: f64,
    /// Absolute KKT violation for the lasso.
    pub kkt_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iter: 10_000, obj_tol: 1e-8, grad_tol: 1e-8, kkt_tol: 1e-7 }
    }
}

pub(crate) fn first_penalized(data: &Dataset) -> usize {
    usize::from(data.intercept())
}

pub(crate) fn result_from_theta(
    data: &Dataset,
    theta: &DVector<f64>,
    trace: alloc::vec::Vec<f64>,
    iterations: usize,
    lambda_beta: f64,
) -> FitResult {
    let (beta, intercept) = FitResult::from_theta(theta, data.intercept());
    FitResult {
        beta,
        intercept,
        gamma: None,
        objective_trace: trace,
        iterations,
        converged: true,
        lambda_beta,
        lambda_gamma: None,
    }
}
