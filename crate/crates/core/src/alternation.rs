//! The alternating algorithm: a β-step on case-adjusted data followed by a
//! closed-form γ-step, repeated until the coefficients settle.
//!
//! For losses that are smooth in the fit (squared error and the smooth margin
//! losses) the blocks are `β` and `γ` and the β-step is the baseline solver on
//! adjusted data. For piecewise-linear losses with an ℓ2 case penalty (check,
//! absolute deviation and hinge) block descent in `(β, γ)` can stall at a
//! non-optimal corner, so the blocks are `β` and the adjusted residual (or
//! slack) `e`; the γ-step is unchanged and the β-step becomes a weighted least
//! squares problem in the penalty term.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::case_adjust::{gamma_step, GammaVector};
use crate::data::{Dataset, FitResult};
use crate::error::{Error, Result};
use crate::losses::{ArgumentKind, EffectiveLossSpec, GammaNorm, LossSpec};
use crate::newton::{AsymmetricSquare, Problem};
use crate::solvers::least_squares_target;
use crate::solvers::{
    first_penalized, hinge_continuation, lasso_step, solve_check, SolverConfig,
};
use crate::solvers::{fit_margin, result_from_theta};

/// Penalty on the model coefficients (intercept never penalized).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaPenalty {
    None,
    /// `λ‖β‖₁`
    L1,
    /// `(λ/2)‖β‖²`
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub lambda_beta: f64,
    pub beta_norm: BetaPenalty,
    pub lambda_gamma: f64,
    pub gamma_norm: GammaNorm,
}

impl PenaltyConfig {
    pub fn new(lambda_gamma: f64, gamma_norm: GammaNorm) -> Self {
        Self { lambda_beta: 0.0, beta_norm: BetaPenalty::None, lambda_gamma, gamma_norm }
    }

    pub fn with_beta(mut self, lambda_beta: f64, beta_norm: BetaPenalty) -> Self {
        self.lambda_beta = lambda_beta;
        self.beta_norm = beta_norm;
        self
    }

    /// Effective loss of `loss` under this penalty; fails for inadmissible
    /// combinations.
    pub fn effective(&self, loss: LossSpec) -> Result<EffectiveLossSpec> {
        EffectiveLossSpec::new(loss, self.lambda_gamma, self.gamma_norm)
    }

    fn beta_value(&self, beta: &DVector<f64>) -> f64 {
        match self.beta_norm {
            BetaPenalty::None => 0.0,
            BetaPenalty::L1 => self.lambda_beta * beta.lp_norm(1),
            BetaPenalty::L2 => 0.5 * self.lambda_beta * beta.norm_squared(),
        }
    }

    fn ridge(&self) -> f64 {
        match self.beta_norm {
            BetaPenalty::L2 => self.lambda_beta,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternationConfig {
    /// Tolerance on `‖Δθ‖²` between outer iterations.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    /// Tolerance on the relative objective change between outer iterations.
    pub rel_objective_tol: f64,
    pub penalty: PenaltyConfig,
    pub solver: SolverConfig,
}

impl AlternationConfig {
    pub fn new(penalty: PenaltyConfig) -> Self {
        Self {
            epsilon: 1e-8,
            max_outer_iters: 100,
            rel_objective_tol: 1e-10,
            penalty,
            solver: SolverConfig::default(),
        }
    }
}

/// Which block pairs with `β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Split {
    Gamma,
    Slack,
}

fn split_for(spec: &EffectiveLossSpec) -> Split {
    match (spec.base(), spec.gamma_norm()) {
        (LossSpec::Check(_), _) | (LossSpec::AbsoluteDeviation, GammaNorm::L2) | (LossSpec::Hinge, GammaNorm::L2) => {
            Split::Slack
        }
        _ => Split::Gamma,
    }
}

fn validate(data: &Dataset, spec: &EffectiveLossSpec, penalty: &PenaltyConfig) -> Result<()> {
    if !(penalty.lambda_beta >= 0.0) {
        return Err(Error::Config(format!("lambda_beta must be nonnegative, got {}", penalty.lambda_beta)));
    }
    if penalty.beta_norm == BetaPenalty::L1 && spec.base() != LossSpec::SquaredError {
        return Err(Error::Config(format!("l1 coefficient penalty is only available with squared error, not {}", spec.base().family())));
    }
    if penalty.beta_norm == BetaPenalty::L2
        && matches!(spec.base(), LossSpec::Check(_))
    {
        return Err(Error::Config("quantile regression takes no coefficient penalty".into()));
    }
    if penalty.beta_norm != BetaPenalty::None && spec.base() == LossSpec::AbsoluteDeviation {
        return Err(Error::Config("absolute deviation takes no coefficient penalty".into()));
    }
    if spec.base().argument_kind() == ArgumentKind::Margin {
        crate::solvers::require_labels(data)?;
    }
    Ok(())
}

struct Alternation<'a> {
    data: &'a Dataset,
    design: nalgebra::DMatrix<f64>,
    spec: EffectiveLossSpec,
    penalty: PenaltyConfig,
    first_pen: usize,
}

impl Alternation<'_> {
    fn fitted(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.design * theta
    }

    /// Residuals or margins of the unadjusted fit.
    fn arguments(&self, theta: &DVector<f64>) -> Vec<f64> {
        let f = self.fitted(theta);
        let y = self.data.y();
        match self.spec.base().argument_kind() {
            ArgumentKind::Residual => (0..y.len()).map(|i| y[i] - f[i]).collect(),
            ArgumentKind::Margin => (0..y.len()).map(|i| y[i] * f[i]).collect(),
        }
    }

    fn slopes<'b>(&self, theta: &'b DVector<f64>) -> nalgebra::DVectorView<'b, f64> {
        theta.rows(self.first_pen, theta.len() - self.first_pen)
    }

    /// `L(β, γ)`.
    fn objective(&self, theta: &DVector<f64>, gamma: &[f64]) -> f64 {
        let u = self.arguments(theta);
        let base = self.spec.base();
        let data: f64 = u
            .iter()
            .zip(gamma)
            .map(|(&ui, &gi)| base.value(self.spec.adjusted_argument(ui, gi)) + self.spec.penalty(gi))
            .sum();
        data + self.penalty.beta_value(&self.slopes(theta).into_owned())
    }

    /// Slack held fixed during a β-step of the slack split.
    fn slack(&self, u: &[f64], gamma: &[f64]) -> Vec<f64> {
        match self.spec.base().argument_kind() {
            ArgumentKind::Residual => u.iter().zip(gamma).map(|(r, g)| r - g).collect(),
            ArgumentKind::Margin => u.iter().zip(gamma).map(|(t, g)| 1.0 - t - g).collect(),
        }
    }

    /// Case parameters implied by a slack vector at `θ`.
    fn gamma_from_slack(&self, theta: &DVector<f64>, e: &[f64]) -> Vec<f64> {
        let u = self.arguments(theta);
        match self.spec.base().argument_kind() {
            ArgumentKind::Residual => u.iter().zip(e).map(|(r, e)| r - e).collect(),
            ArgumentKind::Margin => u.iter().zip(e).map(|(t, e)| 1.0 - t - e).collect(),
        }
    }

    /// The ordinary fit, used as the starting point.
    fn baseline(&self, cfg: &SolverConfig) -> Result<DVector<f64>> {
        let zeros = alloc::vec![0.0; self.data.n()];
        self.beta_step_gamma(&DVector::zeros(self.design.ncols()), &zeros, cfg, true)
    }

    /// β-step of the γ split: the baseline solver on γ-adjusted data.
    fn beta_step_gamma(&self, theta: &DVector<f64>, gamma: &[f64], cfg: &SolverConfig, cold: bool) -> Result<DVector<f64>> {
        let y = self.data.y();
        let warm = (!cold).then_some(theta);
        match self.spec.base() {
            LossSpec::SquaredError => {
                let target = DVector::from_iterator(y.len(), (0..y.len()).map(|i| y[i] - gamma[i]));
                match self.penalty.beta_norm {
                    BetaPenalty::L1 => {
                        let warm_beta = warm.map(|t| self.slopes(t).into_owned());
                        let (beta, b0, _) = lasso_step(self.data, &target, self.penalty.lambda_beta, warm_beta.as_ref(), cfg)?;
                        Ok(if self.first_pen == 1 { beta.insert_row(0, b0) } else { beta })
                    }
                    _ => least_squares_target(&self.design, &target, self.penalty.ridge(), self.first_pen),
                }
            }
            LossSpec::Check(q) => {
                let target: Vec<f64> = (0..y.len()).map(|i| y[i] - gamma[i]).collect();
                let start = least_squares_target(&self.design, &DVector::from_column_slice(&target), 0.0, 0)?;
                Ok(solve_check(&self.design, &target, q.get(), warm.cloned().unwrap_or(start), cfg)?.0)
            }
            LossSpec::AbsoluteDeviation => {
                let target: Vec<f64> = (0..y.len()).map(|i| y[i] - gamma[i]).collect();
                let start = least_squares_target(&self.design, &DVector::from_column_slice(&target), 0.0, 0)?;
                Ok(solve_check(&self.design, &target, 0.5, warm.cloned().unwrap_or(start), cfg)?.0)
            }
            LossSpec::Hinge => Ok(hinge_continuation(
                &self.design,
                y.as_slice(),
                self.penalty.ridge(),
                self.first_pen,
                Some(gamma),
                warm,
                cfg,
            )?
            .0),
            LossSpec::Exponential => {
                let w: Vec<f64> = gamma.iter().map(|g| libm::exp(-g)).collect();
                let fit = fit_margin(self.data, &LossSpec::Exponential, self.penalty.ridge(), None, Some(&w), warm, cfg)?;
                Ok(fit.theta(self.data.intercept()))
            }
            base => {
                let fit = fit_margin(self.data, &base, self.penalty.ridge(), Some(gamma), None, warm, cfg)?;
                Ok(fit.theta(self.data.intercept()))
            }
        }
    }

    /// β-step of the slack split: minimizes the penalty on the implied case
    /// parameters with the slack fixed.
    fn beta_step_slack(&self, theta: &DVector<f64>, e: &[f64], cfg: &SolverConfig) -> Result<DVector<f64>> {
        let y = self.data.y();
        let lam = self.spec.lambda_gamma();
        let (q, target): (f64, Vec<f64>) = match self.spec.base() {
            LossSpec::Check(q) => (q.get(), (0..y.len()).map(|i| y[i] - e[i]).collect()),
            LossSpec::AbsoluteDeviation => (0.5, (0..y.len()).map(|i| y[i] - e[i]).collect()),
            // (1 − eᵢ − yᵢfᵢ)² = (yᵢ(1 − eᵢ) − fᵢ)² for ±1 labels
            _ => (0.5, (0..y.len()).map(|i| y[i] * (1.0 - e[i])).collect()),
        };
        let loss = AsymmetricSquare { q, lam };
        let problem = Problem {
            design: &self.design,
            y: &target,
            kind: ArgumentKind::Residual,
            loss: &loss,
            offsets: None,
            weights: None,
            ridge: self.penalty.ridge(),
            first_penalized: self.first_pen,
        };
        Ok(problem.minimize(theta.clone(), cfg)?.theta)
    }
}

/// Alternating fit started from the ordinary (unadjusted) fit.
pub fn alternate_fit(data: &Dataset, loss: LossSpec, config: &AlternationConfig) -> Result<FitResult> {
    let spec = config.penalty.effective(loss)?;
    validate(data, &spec, &config.penalty)?;
    let alt = Alternation {
        data,
        design: data.design(),
        spec,
        penalty: config.penalty,
        first_pen: first_penalized(data),
    };
    let theta0 = alt.baseline(&config.solver)?;
    run(&alt, theta0, config)
}

/// Alternating fit from a given `θ = (intercept?, β)`, e.g. a neighbouring
/// solution on a penalty path.
pub fn alternate_fit_from(data: &Dataset, loss: LossSpec, config: &AlternationConfig, theta0: DVector<f64>) -> Result<FitResult> {
    let spec = config.penalty.effective(loss)?;
    validate(data, &spec, &config.penalty)?;
    if theta0.len() != data.dim() {
        return Err(Error::Config(format!("starting vector has length {}, expected {}", theta0.len(), data.dim())));
    }
    let alt = Alternation {
        data,
        design: data.design(),
        spec,
        penalty: config.penalty,
        first_pen: first_penalized(data),
    };
    run(&alt, theta0, config)
}

fn run(alt: &Alternation<'_>, theta0: DVector<f64>, config: &AlternationConfig) -> Result<FitResult> {
    let cfg = &config.solver;
    let split = split_for(&alt.spec);
    let n = alt.data.n();
    let mut theta = theta0;
    let mut obj = alt.objective(&theta, &alloc::vec![0.0; n]);
    let mut trace = alloc::vec![obj];
    let mut converged = false;
    let mut iterations = 0;

    for m in 1..=config.max_outer_iters {
        iterations = m;
        let u = alt.arguments(&theta);
        let gamma = gamma_step(&alt.spec, &u).values;
        let before = alt.objective(&theta, &gamma);

        let (new_theta, new_obj) = match split {
            Split::Gamma => {
                let cand = alt.beta_step_gamma(&theta, &gamma, cfg, false)?;
                let cand_obj = alt.objective(&cand, &gamma);
                if cand_obj <= before {
                    (cand, cand_obj)
                } else {
                    (theta.clone(), before)
                }
            }
            Split::Slack => {
                let e = alt.slack(&u, &gamma);
                let cand = alt.beta_step_slack(&theta, &e, cfg)?;
                let cand_obj = alt.objective(&cand, &alt.gamma_from_slack(&cand, &e));
                if cand_obj <= before {
                    (cand, cand_obj)
                } else {
                    (theta.clone(), before)
                }
            }
        };

        let increase = new_obj - obj;
        if increase > 1e-10 * obj.abs().max(1.0) {
            return Err(Error::ObjectiveIncrease { iteration: m, increase });
        }
        let step = (&new_theta - &theta).norm_squared();
        let rel_change = (obj - new_obj).abs() / new_obj.abs().max(1.0);
        theta = new_theta;
        obj = new_obj.min(obj);
        trace.push(obj);
        if step < config.epsilon && rel_change < config.rel_objective_tol {
            converged = true;
            break;
        }
    }

    let gamma = gamma_step(&alt.spec, &alt.arguments(&theta));
    let final_obj = alt.objective(&theta, &gamma.values);
    if final_obj < obj {
        trace.push(final_obj);
    }
    let mut fit = result_from_theta(alt.data, &theta, trace, iterations, config.penalty.lambda_beta);
    fit.gamma = Some(gamma);
    fit.converged = converged;
    fit.lambda_gamma = Some(alt.spec.lambda_gamma());
    Ok(fit)
}

/// Direct minimization of the effective loss plus the coefficient penalty.
pub fn equivalent_effective_fit(
    data: &Dataset,
    effective: &EffectiveLossSpec,
    lambda_beta: f64,
    beta_norm: BetaPenalty,
) -> Result<FitResult> {
    equivalent_effective_fit_with(data, effective, lambda_beta, beta_norm, &SolverConfig::default())
}

pub fn equivalent_effective_fit_with(
    data: &Dataset,
    effective: &EffectiveLossSpec,
    lambda_beta: f64,
    beta_norm: BetaPenalty,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    let penalty = PenaltyConfig {
        lambda_beta,
        beta_norm,
        lambda_gamma: effective.lambda_gamma(),
        gamma_norm: effective.gamma_norm(),
    };
    validate(data, effective, &penalty)?;
    let design = data.design();
    let first_pen = first_penalized(data);
    let scale = effective.lambda_gamma().min(1.0);
    let mut fit = match (effective.base(), effective.gamma_norm(), beta_norm) {
        (LossSpec::SquaredError, GammaNorm::L1, BetaPenalty::L1) => {
            crate::solvers::huber_lasso(data, effective.lambda_gamma(), lambda_beta, cfg)?
        }
        (LossSpec::AbsoluteDeviation, GammaNorm::L1, _) => {
            let start = least_squares_target(&design, data.y(), 0.0, 0)?;
            let (theta, trace, it) = solve_check(&design, data.y().as_slice(), 0.5, start, cfg)?;
            let trace = trace.iter().map(|t| 2.0 * scale * t).collect();
            result_from_theta(data, &theta, trace, it, lambda_beta)
        }
        (LossSpec::Hinge, GammaNorm::L1, _) => {
            let (theta, trace, it) =
                hinge_continuation(&design, data.y().as_slice(), penalty.ridge() / scale, first_pen, None, None, cfg)?;
            let trace = trace.iter().map(|t| scale * t).collect();
            result_from_theta(data, &theta, trace, it, lambda_beta)
        }
        (base, _, _) if base.argument_kind() == ArgumentKind::Margin => {
            fit_margin(data, effective, penalty.ridge(), None, None, None, cfg)?
        }
        _ => {
            let start = least_squares_target(&design, data.y(), penalty.ridge(), first_pen)?;
            let problem = Problem {
                design: &design,
                y: data.y().as_slice(),
                kind: ArgumentKind::Residual,
                loss: effective,
                offsets: None,
                weights: None,
                ridge: penalty.ridge(),
                first_penalized: first_pen,
            };
            let out = problem.minimize(start, cfg)?;
            result_from_theta(data, &out.theta, out.trace, out.iterations, lambda_beta)
        }
    };
    let (design_theta, gamma_spec) = (fit.theta(data.intercept()), effective);
    let f = &design * &design_theta;
    let u: Vec<f64> = match effective.base().argument_kind() {
        ArgumentKind::Residual => (0..data.n()).map(|i| data.y()[i] - f[i]).collect(),
        ArgumentKind::Margin => (0..data.n()).map(|i| data.y()[i] * f[i]).collect(),
    };
    fit.gamma = Some(gamma_step(gamma_spec, &u));
    fit.lambda_gamma = Some(effective.lambda_gamma());
    Ok(fit)
}

impl GammaVector {
    /// Number of cases the fit adjusted.
    pub fn adjusted_count(&self) -> usize {
        self.values.iter().filter(|g| **g != 0.0).count()
    }
}
