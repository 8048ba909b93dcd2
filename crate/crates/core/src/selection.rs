//! Model-selection scores, repeated k-fold cross-validation and the
//! quantile-crossing diagnostic.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, FitResult};
use crate::error::{Error, Result};
use crate::losses::{ArgumentKind, LossSpec};

/// Mallows' `C_p = RSS/σ² − n + 2·df`.
pub fn cp_score(rss: f64, df: usize, sigma2: f64, n: usize) -> f64 {
    rss / sigma2 - n as f64 + 2.0 * df as f64
}

/// `(RSS/n) / (1 − df/n)²`.
pub fn gcv_score(rss: f64, df: usize, n: usize) -> Result<f64> {
    if df >= n {
        return Err(Error::Config(format!("gcv undefined for df = {df} >= n = {n}")));
    }
    let shrink = 1.0 - df as f64 / n as f64;
    Ok(rss / n as f64 / (shrink * shrink))
}

/// Repeated k-fold cross-validation scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CVReport {
    pub folds: usize,
    pub repeats: usize,
    /// Per repeat: hold-out losses summed over all folds, divided by `n`.
    pub scores: Vec<f64>,
    /// Per repeat and fold: that fold's share of the repeat score.
    pub fold_scores: Vec<Vec<f64>>,
    pub mean: f64,
    pub sd: f64,
    pub loss_used: LossSpec,
}

fn row_order(data: &Dataset, a: usize, b: usize) -> Ordering {
    data.y()[a].total_cmp(&data.y()[b]).then_with(|| {
        let x = data.x();
        (0..x.ncols())
            .map(|j| x[(a, j)].total_cmp(&x[(b, j)]))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Fold label of every case for one repeat.
///
/// Cases are first sorted by their values so that the partition does not
/// depend on the order of the input rows, then shuffled by a ChaCha8 stream
/// (`seed`, stream = `repeat`) and dealt round-robin.
pub fn fold_assignment(data: &Dataset, folds: usize, repeat: u64, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if folds > data.n() {
        return Err(Error::Config(format!("{folds} folds leave empty folds for n = {}", data.n())));
    }
    let mut idx: Vec<usize> = (0..data.n()).collect();
    idx.sort_by(|&a, &b| row_order(data, a, b));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repeat);
    idx.shuffle(&mut rng);
    let mut label = vec![0; data.n()];
    for (pos, &i) in idx.iter().enumerate() {
        label[i] = pos % folds;
    }
    Ok(label)
}

/// Loss of a fitted value under `score_loss`.
pub fn case_loss(score_loss: &LossSpec, y: f64, fitted: f64) -> f64 {
    match score_loss.argument_kind() {
        ArgumentKind::Residual => score_loss.value(y - fitted),
        ArgumentKind::Margin => score_loss.value(y * fitted),
    }
}

/// Hold-out losses of one repeat, per fold, each divided by `n`.
pub fn cv_repeat<F>(data: &Dataset, fitter: &F, score_loss: &LossSpec, labels: &[usize], folds: usize) -> Result<Vec<f64>>
where
    F: Fn(&Dataset) -> Result<FitResult>,
{
    let n = data.n() as f64;
    let mut out = Vec::with_capacity(folds);
    for k in 0..folds {
        let train: Vec<usize> = (0..data.n()).filter(|&i| labels[i] != k).collect();
        let test: Vec<usize> = (0..data.n()).filter(|&i| labels[i] == k).collect();
        let fit = fitter(&data.subset(&train))?;
        let total: f64 = test
            .iter()
            .map(|&i| {
                let row: Vec<f64> = data.x().row(i).iter().copied().collect();
                case_loss(score_loss, data.y()[i], fit.predict_row(&row))
            })
            .sum();
        out.push(total / n);
    }
    Ok(out)
}

pub fn kfold_cv<F>(
    data: &Dataset,
    fitter: F,
    score_loss: LossSpec,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<CVReport>
where
    F: Fn(&Dataset) -> Result<FitResult>,
{
    if repeats == 0 {
        return Err(Error::Config("need at least one repeat".into()));
    }
    let mut fold_scores = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let labels = fold_assignment(data, folds, r as u64, seed)?;
        fold_scores.push(cv_repeat(data, &fitter, &score_loss, &labels, folds)?);
    }
    Ok(CVReport::from_fold_scores(fold_scores, folds, score_loss))
}

impl CVReport {
    pub fn from_fold_scores(fold_scores: Vec<Vec<f64>>, folds: usize, loss_used: LossSpec) -> Self {
        let scores: Vec<f64> = fold_scores.iter().map(|f| f.iter().sum()).collect();
        let (mean, sd) = mean_sd(&scores);
        Self { folds, repeats: scores.len(), scores, fold_scores, mean, sd, loss_used }
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (m, libm::sqrt(var))
}

/// Number of grid points at which some higher-level curve lies strictly
/// below a lower-level one.
pub fn crossing_count(fits: &[Vec<f64>], q_levels: &[f64]) -> Result<usize> {
    if fits.len() != q_levels.len() {
        return Err(Error::InvalidData("one fitted curve per quantile level is required".into()));
    }
    if q_levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("quantile levels must be strictly increasing".into()));
    }
    let Some(first) = fits.first() else { return Ok(0) };
    let grid = first.len();
    if fits.iter().any(|f| f.len() != grid) {
        return Err(Error::InvalidData("fitted curves are on different grids".into()));
    }
    let crossed = (0..grid)
        .filter(|&g| {
            let mut running_max = f64::NEG_INFINITY;
            fits.iter().any(|f| {
                let crossed = f[g] < running_max;
                running_max = running_max.max(f[g]);
                crossed
            })
        })
        .count();
    Ok(crossed)
}
