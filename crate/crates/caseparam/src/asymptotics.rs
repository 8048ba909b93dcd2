//! Empirical equivalence of quantile regression and its ℓ2-adjusted version
//! when `λ_γ = c·n^α` grows with the sample size.

use caseparam_core::solvers::fit_quantile;
use caseparam_core::{Dataset, EffectiveLossSpec, GammaNorm, LossSpec, Quantile, ResponseKind};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::simulate::{replicate_rng, ErrorDist};

/// Data-generating process with a linear conditional quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dgp {
    pub errors: ErrorDist,
    /// Fit `y = a + b·x + ε` with standard normal `x`; otherwise intercept only.
    pub covariate: bool,
}

impl Dgp {
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Dataset {
        let p = usize::from(self.covariate);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let y = DVector::from_fn(n, |i, _| {
            let slope = if self.covariate { 2.0 * x[(i, 0)] } else { 0.0 };
            1.0 + slope + self.errors.sample(rng)
        });
        Dataset::new(x, y, true, ResponseKind::Continuous).expect("finite simulated data")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceCurve {
    pub q: f64,
    pub n_grid: Vec<usize>,
    pub alpha: f64,
    pub c: f64,
    /// `‖θ̂_γ − θ̂‖` per n, in replicate order, failed fits dropped.
    pub distances: Vec<Vec<f64>>,
    pub median_distance: Vec<f64>,
    /// Median of `√n·‖θ̂_γ − θ̂‖`.
    pub scaled_distance: Vec<f64>,
    pub replicates: usize,
    pub excluded: Vec<usize>,
}

impl EquivalenceCurve {
    pub fn strictly_decreasing(&self) -> bool {
        self.scaled_distance.windows(2).all(|w| w[1] < w[0])
    }

    /// Fraction of bootstrap resamples of the replicates in which the median
    /// distance is strictly decreasing over the grid.
    pub fn bootstrap_decreasing_fraction(&self, resamples: usize, seed: u64) -> f64 {
        let hits: usize = (0..resamples)
            .into_par_iter()
            .filter(|&b| {
                let mut rng = replicate_rng(seed, b as u64);
                let medians: Vec<f64> = self
                    .distances
                    .iter()
                    .map(|d| {
                        let draw: Vec<f64> = (0..d.len()).map(|_| d[rng.random_range(0..d.len())]).collect();
                        median(draw)
                    })
                    .collect();
                medians.windows(2).all(|w| w[1] < w[0])
            })
            .count();
        hits as f64 / resamples as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Distance between the standard and modified fits on one sample.
pub fn fit_distance(data: &Dataset, q: f64, lambda_gamma: f64) -> caseparam_core::Result<f64> {
    let quant = Quantile::new(q)?;
    let plain = fit_quantile(data, quant, None)?;
    let spec = EffectiveLossSpec::new(LossSpec::Check(quant), lambda_gamma, GammaNorm::AsymmetricL2)?;
    let modified = fit_quantile(data, quant, Some(&spec))?;
    Ok((modified.theta(true) - plain.theta(true)).norm())
}

pub fn equivalence_curve(
    q: f64,
    alpha: f64,
    c: f64,
    n_grid: &[usize],
    replicates: usize,
    dgp: Dgp,
    seed: u64,
) -> EquivalenceCurve {
    let mut distances = Vec::with_capacity(n_grid.len());
    let mut excluded = Vec::with_capacity(n_grid.len());
    for (cell, &n) in n_grid.iter().enumerate() {
        let lam = c * (n as f64).powf(alpha);
        let d: Vec<Option<f64>> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let stream = ((cell as u64) << 32) | r as u64;
                let data = dgp.sample(n, &mut replicate_rng(seed, stream));
                fit_distance(&data, q, lam).ok()
            })
            .collect();
        excluded.push(d.iter().filter(|v| v.is_none()).count());
        distances.push(d.into_iter().flatten().collect::<Vec<f64>>());
    }
    let median_distance: Vec<f64> = distances.iter().map(|d| median(d.clone())).collect();
    let scaled_distance = distances
        .iter()
        .zip(n_grid)
        .map(|(d, &n)| median(d.iter().map(|v| v * (n as f64).sqrt()).collect()))
        .collect();
    EquivalenceCurve {
        q,
        n_grid: n_grid.to_vec(),
        alpha,
        c,
        distances,
        median_distance,
        scaled_distance,
        replicates,
        excluded,
    }
}
