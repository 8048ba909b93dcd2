//! Seeded simulation studies.
//!
//! Replicate `i` of a study draws from ChaCha8 stream `i` of the study seed,
//! so every method and every contamination setting of that replicate sees
//! the same base draws. Replicates run in parallel and are collected in
//! index order.

pub mod classification;
pub mod quantile;
pub mod regression;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use classification::{
    analytic_error_rate, run_classification_study, ClassMethod, ClassificationScenario, Separation,
};
pub use quantile::{
    crossing_comparison, cv_comparison, hetero_fixture, run_quantile_study, ErrorDist, QuantileFitter,
};
pub use regression::{delta_histogram, run_regression_study, Contamination, RegressionMethod, RegressionScenario, Sparsity};

/// Generator for replicate `replicate` of a study seeded with `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    MseBeta,
    ModelSizeDelta,
    AnalyticErrorRate,
    IntegratedMse,
    CvScore,
}

/// One measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub replicate: usize,
    pub setting: String,
    pub method: String,
    pub metric: MetricKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub setting: String,
    pub method: String,
    pub metric: MetricKind,
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Per-replicate metrics of a study with their summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub study: String,
    pub scenario: String,
    pub seed: u64,
    pub replicates: usize,
    pub rows: Vec<ReportRow>,
    /// Replicates dropped per method because the fit failed or degenerated.
    pub excluded: BTreeMap<String, usize>,
}

impl StudyReport {
    pub fn new(study: &str, scenario: String, seed: u64, replicates: usize) -> Self {
        Self { study: study.to_owned(), scenario, seed, replicates, rows: Vec::new(), excluded: BTreeMap::new() }
    }

    pub fn push(&mut self, replicate: usize, setting: &str, method: &str, metric: MetricKind, value: f64) {
        self.rows.push(ReportRow {
            replicate,
            setting: setting.to_owned(),
            method: method.to_owned(),
            metric,
            value,
        });
    }

    pub fn exclude(&mut self, method: &str) {
        *self.excluded.entry(method.to_owned()).or_insert(0) += 1;
    }

    /// Values of one (setting, method, metric) cell in replicate order.
    pub fn values(&self, setting: &str, method: &str, metric: MetricKind) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.setting == setting && r.method == method && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }

    pub fn mean(&self, setting: &str, method: &str, metric: MetricKind) -> f64 {
        let v = self.values(setting, method, metric);
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Mean and sample sd of every cell, in first-appearance order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(String, String, MetricKind)> = Vec::new();
        for r in &self.rows {
            let key = (r.setting.clone(), r.method.clone(), r.metric);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.into_iter()
            .map(|(setting, method, metric)| {
                let v = self.values(&setting, &method, metric);
                let (mean, sd) = caseparam_core::selection::mean_sd(&v);
                SummaryRow { setting, method, metric, count: v.len(), mean, sd }
            })
            .collect()
    }
}

/// Standard normal CDF.
pub(crate) fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}
