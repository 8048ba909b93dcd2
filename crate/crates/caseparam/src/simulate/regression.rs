//! Robust lasso versus lasso under error and leverage contamination.

use caseparam_core::selection::cp_score;
use caseparam_core::solvers::{fit_lasso_path, fit_least_squares, lambda_max, log_grid};
use caseparam_core::tuning::robust_scale;
use caseparam_core::{
    equivalent_effective_fit, BetaPenalty, Dataset, EffectiveLossSpec, GammaNorm, LossSpec, ResponseKind,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{replicate_rng, MetricKind, StudyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sparsity {
    Sparse,
    Intermediate,
    Dense,
}

impl Sparsity {
    pub const ALL: [Sparsity; 3] = [Self::Sparse, Self::Intermediate, Self::Dense];

    pub fn beta(self) -> DVector<f64> {
        DVector::from_column_slice(&match self {
            Self::Sparse => [5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            Self::Intermediate => [3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
            Self::Dense => [0.85; 8],
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sparse => "sparse",
            Self::Intermediate => "intermediate",
            Self::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contamination {
    None,
    /// Errors of the first 5% of cases tripled.
    Epsilon,
    /// First covariate of the first 5% of cases tripled.
    X,
}

impl Contamination {
    pub const ALL: [Contamination; 3] = [Self::None, Self::Epsilon, Self::X];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "clean",
            Self::Epsilon => "epsilon",
            Self::X => "x",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressionMethod {
    LassoCp,
    RobustLassoCp { k: f64 },
}

impl RegressionMethod {
    pub fn name(self) -> String {
        match self {
            Self::LassoCp => "lasso".into(),
            Self::RobustLassoCp { k } => format!("robust_lasso_k{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionScenario {
    pub sparsity: Sparsity,
    pub n: usize,
    pub rho: f64,
    pub sigma: f64,
    /// Length of the lasso grid between `λ_max` and `1e−3·λ_max`; the
    /// unpenalized fit is added as a last candidate.
    pub grid: usize,
}

impl RegressionScenario {
    pub fn new(sparsity: Sparsity) -> Self {
        Self { sparsity, n: 100, rho: 0.5, sigma: 3.0, grid: 60 }
    }

    pub fn p(&self) -> usize {
        8
    }

    /// `Σ_ij = ρ^|i−j|`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let p = self.p();
        DMatrix::from_fn(p, p, |i, j| self.rho.powi((i as i32 - j as i32).abs()))
    }

    pub fn contaminated_count(&self) -> usize {
        (0.05 * self.n as f64).ceil() as usize
    }
}

/// Base draws of one replicate, shared by all contamination settings.
#[derive(Debug, Clone)]
pub struct BaseDraws {
    pub x: DMatrix<f64>,
    pub eps: DVector<f64>,
}

pub fn draw_base<R: Rng>(scenario: &RegressionScenario, rng: &mut R) -> BaseDraws {
    let p = scenario.p();
    let l = scenario.covariance().cholesky().expect("AR(1) covariance is positive definite").l();
    let z = DMatrix::from_fn(scenario.n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = z * l.transpose();
    let eps = DVector::from_fn(scenario.n, |_, _| scenario.sigma * rng.sample::<f64, _>(StandardNormal));
    BaseDraws { x, eps }
}

/// Covariates and response of one contamination setting.
pub fn contaminate(scenario: &RegressionScenario, base: &BaseDraws, which: Contamination) -> (DMatrix<f64>, DVector<f64>) {
    let m = scenario.contaminated_count();
    let beta = scenario.sparsity.beta();
    let mut x = base.x.clone();
    let mut eps = base.eps.clone();
    match which {
        Contamination::None => {}
        Contamination::Epsilon => eps.rows_mut(0, m).scale_mut(3.0),
        Contamination::X => x.view_mut((0, 0), (m, 1)).scale_mut(3.0),
    }
    // the response follows the covariates as observed
    let y = &x * &beta + eps;
    (x, y)
}

/// Selected coefficients on the raw scale and the selected model size.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub beta: DVector<f64>,
    pub intercept: f64,
    pub df: usize,
    pub lambda: f64,
}

fn grid(data: &Dataset, count: usize) -> Vec<f64> {
    log_grid(lambda_max(data), 1e-3, count)
}

fn raw(data: &Dataset, beta: &DVector<f64>, intercept: f64) -> (DVector<f64>, f64) {
    match data.standardization() {
        Some(st) => st.back_transform(beta, intercept),
        None => (beta.clone(), intercept),
    }
}

/// Lasso with `C_p` selection; `σ²` is the unbiased estimate from the full
/// least squares fit.
pub fn lasso_cp(x: DMatrix<f64>, y: DVector<f64>, grid_len: usize) -> caseparam_core::Result<Selected> {
    let data = Dataset::standardized(x, y, true, ResponseKind::Continuous)?;
    let (n, p) = (data.n(), data.p());
    let full = fit_least_squares(&data, 0.0)?;
    let rss_full = (data.y() - full.predict(data.x())).norm_squared();
    let sigma2 = rss_full / (n - p - 1) as f64;
    let mut path = fit_lasso_path(&data, &grid(&data, grid_len))?;
    path.lambdas.push(0.0);
    path.betas.push(full.beta.clone());
    path.intercepts.push(full.intercept);
    path.df.push(full.df());
    let mut best: Option<(f64, usize)> = None;
    for k in 0..path.len() {
        let mut f = data.x() * &path.betas[k];
        f.add_scalar_mut(path.intercepts[k]);
        let rss = (data.y() - f).norm_squared();
        let cp = cp_score(rss, path.df[k], sigma2, n);
        if best.is_none_or(|(b, _)| cp < b) {
            best = Some((cp, k));
        }
    }
    let k = best.expect("grid is nonempty").1;
    let (beta, intercept) = raw(&data, &path.betas[k], path.intercepts[k]);
    Ok(Selected { beta, intercept, df: path.df[k], lambda: path.lambdas[k] })
}

/// Robust lasso (ℓ1 case penalty, `λ_γ = kσ̂`) with `C_p` selection.
///
/// `σ̂` is the normalized MAD of the full least squares residuals; it sets
/// the bending constant and `σ²` of `C_p`, whose residual sum of squares
/// uses the case-adjusted residuals.
pub fn robust_lasso_cp(x: DMatrix<f64>, y: DVector<f64>, k: f64, grid_len: usize) -> caseparam_core::Result<Selected> {
    let data = Dataset::standardized(x, y, true, ResponseKind::Continuous)?;
    let n = data.n();
    let full = fit_least_squares(&data, 0.0)?;
    let resid: Vec<f64> = (data.y() - full.predict(data.x())).iter().copied().collect();
    let sigma = robust_scale(&resid)?;
    let spec = EffectiveLossSpec::new(LossSpec::SquaredError, k * sigma, GammaNorm::L1)?;
    let mut best: Option<(f64, Selected)> = None;
    let mut lambdas = grid(&data, grid_len);
    lambdas.push(0.0);
    for lam in lambdas {
        let fit = if lam > 0.0 {
            equivalent_effective_fit(&data, &spec, lam, BetaPenalty::L1)?
        } else {
            equivalent_effective_fit(&data, &spec, 0.0, BetaPenalty::None)?
        };
        let gamma = fit.gamma.as_ref().expect("effective fits report case parameters");
        let f = fit.predict(data.x());
        let rss: f64 = (0..n).map(|i| (data.y()[i] - gamma.values[i] - f[i]).powi(2)).sum();
        let cp = cp_score(rss, fit.df(), sigma * sigma, n);
        if best.as_ref().is_none_or(|(b, _)| cp < *b) {
            let (beta, intercept) = raw(&data, &fit.beta, fit.intercept);
            best = Some((cp, Selected { beta, intercept, df: fit.df(), lambda: lam }));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}

/// `(β̂ − β)ᵀ Σ (β̂ − β)`.
pub fn mse_beta(estimate: &DVector<f64>, truth: &DVector<f64>, sigma: &DMatrix<f64>) -> f64 {
    let d = estimate - truth;
    (d.transpose() * sigma * &d)[0]
}

fn select(method: RegressionMethod, x: DMatrix<f64>, y: DVector<f64>, grid_len: usize) -> caseparam_core::Result<Selected> {
    match method {
        RegressionMethod::LassoCp => lasso_cp(x, y, grid_len),
        RegressionMethod::RobustLassoCp { k } => robust_lasso_cp(x, y, k, grid_len),
    }
}

/// Per replicate and method: `MseBeta` in each contamination setting, and
/// `ModelSizeDelta` (contaminated minus clean) for the two contaminated ones.
pub fn run_regression_study(
    scenario: &RegressionScenario,
    methods: &[RegressionMethod],
    replicates: usize,
    seed: u64,
) -> StudyReport {
    let sigma = scenario.covariance();
    let truth = scenario.sparsity.beta();
    let per_rep: Vec<Vec<(String, Option<[(f64, usize); 3]>)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let base = draw_base(scenario, &mut replicate_rng(seed, r as u64));
            methods
                .iter()
                .map(|&m| {
                    let mut out = [(0.0, 0); 3];
                    for (slot, c) in Contamination::ALL.iter().enumerate() {
                        let (x, y) = contaminate(scenario, &base, *c);
                        match select(m, x, y, scenario.grid) {
                            Ok(s) => out[slot] = (mse_beta(&s.beta, &truth, &sigma), s.df),
                            Err(_) => return (m.name(), None),
                        }
                    }
                    (m.name(), Some(out))
                })
                .collect()
        })
        .collect();
    let mut report = StudyReport::new("robust_lasso", scenario.sparsity.name().into(), seed, replicates);
    for (r, results) in per_rep.into_iter().enumerate() {
        for (name, out) in results {
            let Some(out) = out else {
                report.exclude(&name);
                continue;
            };
            for (slot, c) in Contamination::ALL.iter().enumerate() {
                report.push(r, c.name(), &name, MetricKind::MseBeta, out[slot].0);
            }
            for slot in 1..3 {
                let delta = out[slot].1 as f64 - out[0].1 as f64;
                report.push(r, Contamination::ALL[slot].name(), &name, MetricKind::ModelSizeDelta, delta);
            }
        }
    }
    report
}

/// Counts of model-size deltas at −3..=3, the end bins cumulative.
pub fn delta_histogram(deltas: &[f64]) -> [usize; 7] {
    let mut h = [0; 7];
    for &d in deltas {
        let bin = (d.round() as i64).clamp(-3, 3) + 3;
        h[bin as usize] += 1;
    }
    h
}
