//! Linear classifiers on a two-class Gaussian mixture, scored by their exact
//! error rate under the mixture.

use caseparam_core::solvers::{fit_lda, fit_logistic_with, fit_svm_with, SolverConfig, SvmVariant};
use caseparam_core::{Dataset, FitResult, ResponseKind};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{phi, replicate_rng, MetricKind, StudyReport};

/// Coefficient penalty for the methods fitted "without penalty"; keeps them
/// finite on separable samples.
pub const NEAR_ZERO_RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separation {
    Easy,
    Intermediate,
    Hard,
}

impl Separation {
    pub const ALL: [Separation; 3] = [Self::Easy, Self::Intermediate, Self::Hard];

    /// Distance between the class means along the first coordinate.
    pub fn mean_difference(self) -> f64 {
        match self {
            Self::Easy => 4.0,
            Self::Intermediate => 2.7,
            Self::Hard => 2.0,
        }
    }

    pub fn bayes_error(self) -> f64 {
        phi(-0.5 * self.mean_difference())
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Easy => "easy",
            Self::Intermediate => "intermediate",
            Self::Hard => "hard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationScenario {
    pub separation: Separation,
    pub flip_fraction: f64,
    pub n: usize,
    pub dim: usize,
}

impl ClassificationScenario {
    pub fn new(separation: Separation, flip_fraction: f64) -> Self {
        Self { separation, flip_fraction, n: 100, dim: 5 }
    }

    pub fn name(&self) -> String {
        format!("{}_flip{}", self.separation.name(), (100.0 * self.flip_fraction).round())
    }

    /// Mean of the `+1` class; the `−1` class mean is its negative.
    pub fn mean_plus(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        m[0] = 0.5 * self.separation.mean_difference();
        m
    }

    /// Equal class sizes; then `round(flip_fraction·n)` labels, chosen at
    /// random, are flipped.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Dataset {
        let mu = self.mean_plus();
        let labels: Vec<f64> = (0..self.n).map(|i| if i < self.n / 2 { 1.0 } else { -1.0 }).collect();
        let x = DMatrix::from_fn(self.n, self.dim, |i, j| labels[i] * mu[j] + rng.sample::<f64, _>(StandardNormal));
        let mut y = DVector::from_vec(labels);
        let flips = (self.flip_fraction * self.n as f64).round() as usize;
        for i in sample(rng, self.n, flips) {
            y[i] = -y[i];
        }
        Dataset::new(x, y, true, ResponseKind::BinaryPM1).expect("simulated labels are ±1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassMethod {
    Lda,
    Svm,
    SmoothSvm,
    HuberizedSvm { k: f64 },
    Logistic,
    LinearizedLogistic { k: f64 },
}

impl ClassMethod {
    /// Columns of the comparison table, in order.
    pub fn table() -> Vec<ClassMethod> {
        vec![
            Self::Svm,
            Self::HuberizedSvm { k: -0.5 },
            Self::HuberizedSvm { k: -1.0 },
            Self::SmoothSvm,
            Self::LinearizedLogistic { k: -0.5 },
            Self::LinearizedLogistic { k: -1.0 },
            Self::Logistic,
            Self::Lda,
        ]
    }

    pub fn name(self) -> String {
        match self {
            Self::Lda => "lda".into(),
            Self::Svm => "svm".into(),
            Self::SmoothSvm => "smooth_svm".into(),
            Self::HuberizedSvm { k } => format!("huberized_svm_k{k}"),
            Self::Logistic => "lr".into(),
            Self::LinearizedLogistic { k } => format!("linearized_lr_k{k}"),
        }
    }

    pub fn fit(self, data: &Dataset) -> caseparam_core::Result<FitResult> {
        let cfg = SolverConfig::default();
        match self {
            Self::Lda => fit_lda(data),
            Self::Svm => fit_svm_with(data, SvmVariant::Hinge, NEAR_ZERO_RIDGE, &cfg),
            Self::SmoothSvm => fit_svm_with(data, SvmVariant::SquaredHinge, NEAR_ZERO_RIDGE, &cfg),
            Self::HuberizedSvm { k } => fit_svm_with(data, SvmVariant::Huberized(k), NEAR_ZERO_RIDGE, &cfg),
            Self::Logistic => fit_logistic_with(data, None, NEAR_ZERO_RIDGE, &cfg),
            Self::LinearizedLogistic { k } => fit_logistic_with(data, Some(k), NEAR_ZERO_RIDGE, &cfg),
        }
    }
}

/// Error rate of the rule `sign(wᵀx + b)` under the equal-weight mixture
/// `N(μ₊, I)`, `N(−μ₊, I)`. `None` for a zero direction.
pub fn analytic_error_rate(w: &DVector<f64>, b: f64, mean_plus: &DVector<f64>) -> Option<f64> {
    let norm = w.norm();
    if !(norm > 0.0) || !b.is_finite() {
        return None;
    }
    let s = w.dot(mean_plus);
    Some(0.5 * phi(-(s + b) / norm) + 0.5 * phi((-s + b) / norm))
}

/// Analytic error rate of every method in every replicate.
pub fn run_classification_study(
    scenario: &ClassificationScenario,
    methods: &[ClassMethod],
    replicates: usize,
    seed: u64,
) -> StudyReport {
    let mu = scenario.mean_plus();
    let per_rep: Vec<Vec<(String, Option<f64>)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let data = scenario.draw(&mut replicate_rng(seed, r as u64));
            methods
                .iter()
                .map(|m| {
                    let err = m.fit(&data).ok().and_then(|f| analytic_error_rate(&f.beta, f.intercept, &mu));
                    (m.name(), err)
                })
                .collect()
        })
        .collect();
    let name = scenario.name();
    let mut report = StudyReport::new("classification", name.clone(), seed, replicates);
    for (r, results) in per_rep.into_iter().enumerate() {
        for (method, err) in results {
            match err {
                Some(e) => report.push(r, &name, &method, MetricKind::AnalyticErrorRate, e),
                None => report.exclude(&method),
            }
        }
    }
    report
}
