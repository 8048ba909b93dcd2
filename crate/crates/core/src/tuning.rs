//! Data-driven choice of the case-parameter penalty `λ_γ`.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::median;

/// Consistency factor making the MAD unbiased for σ under normality.
pub const MAD_NORMALIZER: f64 = 1.4826;

pub const DEFAULT_REGRESSION_K: f64 = 2.0;
pub const DEFAULT_ALPHA: f64 = 0.3;
pub const DEFAULT_C_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuningRule {
    /// `λ_γ = k·σ̂`.
    RegressionBend { k: f64 },
    /// `λ_γ = c_q·n^α/σ̂`, with `c_scale` the leading factor of `c_q`.
    QuantileRule { alpha: f64, c_scale: f64 },
    /// Bending constant of the Huberized SVM or linearized logistic loss.
    ClassificationBend { k: f64 },
}

impl TuningRule {
    pub fn regression() -> Self {
        Self::RegressionBend { k: DEFAULT_REGRESSION_K }
    }

    pub fn quantile() -> Self {
        Self::QuantileRule { alpha: DEFAULT_ALPHA, c_scale: DEFAULT_C_SCALE }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::RegressionBend { k } if !(k > 0.0) => Err(Error::Config(format!("bending constant must be positive, got {k}"))),
            Self::QuantileRule { alpha, .. } if !(alpha > 0.0) => Err(Error::Config(format!("alpha must be positive, got {alpha}"))),
            Self::QuantileRule { c_scale, .. } if !(c_scale > 0.0) => Err(Error::Config(format!("c_scale must be positive, got {c_scale}"))),
            _ => Ok(()),
        }
    }

    /// Regression bending constants outside `[1, 2]` are allowed but unusual.
    pub fn outside_recommended_band(&self) -> bool {
        matches!(*self, Self::RegressionBend { k } if !(1.0..=2.0).contains(&k))
    }
}

/// Normalized median absolute deviation.
pub fn robust_scale(r: &[f64]) -> Result<f64> {
    if r.len() < 2 {
        return Err(Error::InvalidData("robust scale needs at least two residuals".into()));
    }
    let m = median(r);
    let dev: alloc::vec::Vec<f64> = r.iter().map(|v| (v - m).abs()).collect();
    let s = MAD_NORMALIZER * median(&dev);
    if s > 0.0 {
        Ok(s)
    } else {
        Err(Error::DegenerateScale)
    }
}

#[inline]
pub fn lambda_gamma_regression(k: f64, sigma_hat: f64) -> f64 {
    k * sigma_hat
}

/// `0.5·exp(−2.118 − 1.097·min(q, 1−q))`.
pub fn c_q(q: f64) -> f64 {
    c_q_scaled(q, DEFAULT_C_SCALE)
}

pub fn c_q_scaled(q: f64, c_scale: f64) -> f64 {
    let m = if q < 0.5 { q } else { 1.0 - q };
    c_scale * libm::exp(-2.118 - 1.097 * m)
}

/// `c_q·n^α/σ̂`.
pub fn lambda_gamma_quantile(q: f64, n: usize, sigma_hat: f64, alpha: f64) -> f64 {
    c_q(q) * libm::pow(n as f64, alpha) / sigma_hat
}

/// Quadratic band `(−q/λ, (1−q)/λ)` induced by `λ`.
pub fn adjustment_interval(q: f64, lambda_gamma: f64) -> (f64, f64) {
    (-q / lambda_gamma, (1.0 - q) / lambda_gamma)
}

/// Huberized SVM: `λ_γ = 1/(1−k)` for `k < 1`.
pub fn lambda_from_bending_svm(k: f64) -> Result<f64> {
    if k < 1.0 {
        Ok(1.0 / (1.0 - k))
    } else {
        Err(Error::Config(format!("svm bending constant must be below 1, got {k}")))
    }
}

/// Linearized logistic: `λ_γ = 1/(1+eᵏ)`.
pub fn lambda_from_bending_logistic(k: f64) -> f64 {
    1.0 / (1.0 + libm::exp(k))
}
