//! Quantile regression against its ℓ2-adjusted version.

use caseparam_core::features::{natural_spline_design, SplineBasis};
use caseparam_core::selection::{crossing_count, fold_assignment, cv_repeat};
use caseparam_core::solvers::fit_quantile;
use caseparam_core::tuning::{lambda_gamma_quantile, robust_scale};
use caseparam_core::{Dataset, EffectiveLossSpec, FitResult, GammaNorm, LossSpec, Quantile, ResponseKind};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared as ChiSquaredDist, ContinuousCDF, Normal, StudentsT};

use super::{replicate_rng, MetricKind, StudyReport};

/// Degrees of freedom of the chi-square behind [`ErrorDist::Skewed`].
pub const SKEWED_DF: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorDist {
    Normal,
    T(f64),
    /// Chi-square shifted to median zero.
    Skewed,
}

impl ErrorDist {
    pub fn name(self) -> String {
        match self {
            Self::Normal => "normal".into(),
            Self::T(df) => format!("t{df}"),
            Self::Skewed => "skewed".into(),
        }
    }

    pub fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Self::Normal => rng.sample(StandardNormal),
            Self::T(df) => StudentT::new(df).expect("positive degrees of freedom").sample(rng),
            Self::Skewed => ChiSquared::new(SKEWED_DF).expect("positive degrees of freedom").sample(rng) - chi_median(),
        }
    }

    pub fn quantile(self, q: f64) -> f64 {
        match self {
            Self::Normal => Normal::standard().inverse_cdf(q),
            Self::T(df) => StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").inverse_cdf(q),
            Self::Skewed => chi_quantile(q) - chi_median(),
        }
    }
}

fn chi_quantile(q: f64) -> f64 {
    ChiSquaredDist::new(SKEWED_DF).expect("positive degrees of freedom").inverse_cdf(q)
}

fn chi_median() -> f64 {
    chi_quantile(0.5)
}

/// Plain quantile regression or its rule-tuned ℓ2-adjusted version.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantileFitter {
    Standard,
    /// `λ_γ = c_q n^α / σ̂`, `σ̂` the normalized MAD of the standard fit's
    /// residuals.
    Modified { alpha: f64 },
}

impl QuantileFitter {
    pub fn name(self) -> &'static str {
        match self {
            Self::Standard => "qr",
            Self::Modified { .. } => "qr_m",
        }
    }

    pub fn fit(self, data: &Dataset, q: f64) -> caseparam_core::Result<FitResult> {
        let quant = Quantile::new(q)?;
        let plain = fit_quantile(data, quant, None)?;
        let Self::Modified { alpha } = self else { return Ok(plain) };
        let resid: Vec<f64> = (data.y() - plain.predict(data.x())).iter().copied().collect();
        let sigma = robust_scale(&resid)?;
        let lam = lambda_gamma_quantile(q, data.n(), sigma, alpha);
        let spec = EffectiveLossSpec::new(LossSpec::Check(quant), lam, GammaNorm::AsymmetricL2)?;
        fit_quantile(data, quant, Some(&spec))
    }
}

/// Linear design of the efficiency study: two standard normal covariates.
pub const QUANTILE_STUDY_THETA: [f64; 3] = [1.0, 1.0, -1.0];

/// Covariate points for integrating squared error over the covariate law.
pub const INTEGRATION_POINTS: usize = 10_000;

/// Second-moment matrix of `(1, x)` over `INTEGRATION_POINTS` draws.
fn integration_moment(seed: u64) -> DMatrix<f64> {
    let mut rng = replicate_rng(seed, u64::MAX);
    let p = QUANTILE_STUDY_THETA.len() - 1;
    let pts = DMatrix::from_fn(INTEGRATION_POINTS, p + 1, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
    pts.transpose() * &pts / INTEGRATION_POINTS as f64
}

fn linear_sample<R: Rng>(n: usize, dist: ErrorDist, rng: &mut R) -> Dataset {
    let p = QUANTILE_STUDY_THETA.len() - 1;
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let y = DVector::from_fn(n, |i, _| {
        QUANTILE_STUDY_THETA[0] + (0..p).map(|j| QUANTILE_STUDY_THETA[j + 1] * x[(i, j)]).sum::<f64>() + dist.sample(rng)
    });
    Dataset::new(x, y, true, ResponseKind::Continuous).expect("finite simulated data")
}

/// Integrated squared error of the fitted quantile surface for both fitters,
/// per replicate, for every `(q, n)` pair.
pub fn run_quantile_study(
    q_levels: &[f64],
    n_grid: &[usize],
    dist: ErrorDist,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> StudyReport {
    let moment = integration_moment(seed);
    let fitters = [QuantileFitter::Standard, QuantileFitter::Modified { alpha }];
    let mut report = StudyReport::new("quantile", dist.name(), seed, replicates);
    for (cell, (&q, &n)) in q_levels.iter().flat_map(|q| n_grid.iter().map(move |n| (q, n))).enumerate() {
        let mut truth = DVector::from_column_slice(&QUANTILE_STUDY_THETA);
        truth[0] += dist.quantile(q);
        let setting = format!("q{q}_n{n}");
        let per_rep: Vec<Vec<Option<f64>>> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                // one stream per (cell, replicate), shared by both fitters
                let stream = ((cell as u64) << 32) | r as u64;
                let data = linear_sample(n, dist, &mut replicate_rng(seed, stream));
                fitters
                    .iter()
                    .map(|f| {
                        f.fit(&data, q).ok().map(|fit| {
                            let d = fit.theta(true) - &truth;
                            (d.transpose() * &moment * &d)[0]
                        })
                    })
                    .collect()
            })
            .collect();
        for (r, vals) in per_rep.into_iter().enumerate() {
            for (f, v) in fitters.iter().zip(vals) {
                match v {
                    Some(v) => report.push(r, &setting, f.name(), MetricKind::IntegratedMse, v),
                    None => report.exclude(f.name()),
                }
            }
        }
    }
    report
}

/// Heteroscedastic curve with a nonlinear median, standing in for a growth
/// chart: `x ~ U(0, 1)`, `y = g(x) + s(x)·ε` with skewed `ε`.
pub fn hetero_fixture<R: Rng>(n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y = x
        .iter()
        .map(|&t| {
            let g = 20.0 + 8.0 * t + 3.0 * (2.0 * std::f64::consts::PI * t).sin();
            let s = 1.0 + 3.0 * t;
            g + s * ErrorDist::Skewed.sample(rng) / 2.0
        })
        .collect();
    (x, y)
}

/// Number of interior knots of the spline fixture.
pub const FIXTURE_KNOTS: usize = 6;

fn spline_data(x: &[f64], y: &[f64], basis: &SplineBasis) -> Dataset {
    let design = natural_spline_design(x, basis);
    Dataset::new(design, DVector::from_column_slice(y), true, ResponseKind::Continuous).expect("finite fixture")
}

/// Mean check-loss CV score of each fitter at each `q` over repeated
/// `folds`-fold splits of one fixture sample. Both fitters are scored with
/// the plain check loss and share the fold labels of each repeat.
pub fn cv_comparison(
    n: usize,
    q_levels: &[f64],
    alpha: f64,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> caseparam_core::Result<StudyReport> {
    let (x, y) = hetero_fixture(n, &mut replicate_rng(seed, u64::MAX));
    let basis = SplineBasis::at_quantiles(&x, FIXTURE_KNOTS)?;
    let data = spline_data(&x, &y, &basis);
    let fitters = [QuantileFitter::Standard, QuantileFitter::Modified { alpha }];
    let mut report = StudyReport::new("cv", format!("hetero_n{n}"), seed, repeats);
    for &q in q_levels {
        let score = LossSpec::Check(Quantile::new(q)?);
        let per_rep: Vec<caseparam_core::Result<Vec<f64>>> = (0..repeats)
            .into_par_iter()
            .map(|r| {
                let labels = fold_assignment(&data, folds, r as u64, seed)?;
                fitters
                    .iter()
                    .map(|f| {
                        let fitter = |d: &Dataset| f.fit(d, q);
                        Ok(cv_repeat(&data, &fitter, &score, &labels, folds)?.iter().sum())
                    })
                    .collect()
            })
            .collect();
        let setting = format!("q{q}");
        for (r, vals) in per_rep.into_iter().enumerate() {
            for (f, v) in fitters.iter().zip(vals?) {
                report.push(r, &setting, f.name(), MetricKind::CvScore, v);
            }
        }
    }
    Ok(report)
}

/// Crossing counts of both fitters on fresh fixture samples, one per
/// replicate, evaluated on a `grid`-point grid over the sample range.
pub fn crossing_comparison(
    n: usize,
    q_levels: &[f64],
    alpha: f64,
    grid: usize,
    replicates: usize,
    seed: u64,
) -> Vec<(usize, usize)> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let (x, y) = hetero_fixture(n, &mut replicate_rng(seed, r as u64));
            let basis = SplineBasis::at_quantiles(&x, FIXTURE_KNOTS).expect("continuous covariate");
            let data = spline_data(&x, &y, &basis);
            let (lo, hi) = basis.boundary();
            let pts: Vec<f64> = (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect();
            let grid_design = natural_spline_design(&pts, &basis);
            let count = |f: QuantileFitter| -> usize {
                let curves: Vec<Vec<f64>> = q_levels
                    .iter()
                    .map(|&q| match f.fit(&data, q) {
                        Ok(fit) => fit.predict(&grid_design).iter().copied().collect(),
                        Err(_) => vec![f64::NAN; grid],
                    })
                    .collect();
                crossing_count(&curves, q_levels).unwrap_or(grid)
            };
            (count(QuantileFitter::Standard), count(QuantileFitter::Modified { alpha }))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn skewed_errors_have_median_zero() {
        assert!(ErrorDist::Skewed.quantile(0.5).abs() < 1e-8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let below = (0..40_000).filter(|_| ErrorDist::Skewed.sample(&mut rng) < 0.0).count();
        assert!((below as f64 / 40_000.0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn quantiles_match_known_values() {
        assert!((ErrorDist::Normal.quantile(0.9) - 1.281_551_565_5).abs() < 1e-8);
        assert!((ErrorDist::T(3.0).quantile(0.9) - 1.637_744_353_7).abs() < 1e-6);
    }

    #[test]
    fn integration_moment_is_near_identity() {
        let m = integration_moment(3);
        assert!((m - DMatrix::identity(3, 3)).amax() < 0.05);
    }

    #[test]
    fn study_reports_both_fitters() {
        let r = run_quantile_study(&[0.5], &[50], ErrorDist::Normal, 0.3, 4, 9);
        assert_eq!(r.values("q0.5_n50", "qr", MetricKind::IntegratedMse).len(), 4);
        assert_eq!(r.values("q0.5_n50", "qr_m", MetricKind::IntegratedMse).len(), 4);
        assert_eq!(r, run_quantile_study(&[0.5], &[50], ErrorDist::Normal, 0.3, 4, 9));
    }
}
