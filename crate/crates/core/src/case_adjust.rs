//! Closed-form minimizers of the decoupled per-case problems.
//!
//! For residual losses `γ̂_i` is the shift subtracted from the residual; for
//! margin losses it is the (nonnegative) increase of the margin, i.e.
//! `y_i·γ_i`. [`GammaVector::signed`] turns margin magnitudes back into case
//! parameters carrying the sign of the label.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::losses::{
    margin_threshold, ConvexProfile, EffectiveLossSpec, ExponentialCurve, GammaNorm, LogisticCurve,
    LossSpec, SquaredHingeCurve,
};

/// Fitted case parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaVector {
    pub values: Vec<f64>,
    pub norm: GammaNorm,
}

impl GammaVector {
    pub fn zeros(n: usize, norm: GammaNorm) -> Self {
        Self { values: alloc::vec![0.0; n], norm }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices of cases whose parameter is nonzero.
    pub fn adjusted_cases(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, g)| **g != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Multiplies margin magnitudes by the ±1 labels.
    pub fn signed(&self, labels: &[f64]) -> Vec<f64> {
        self.values.iter().zip(labels).map(|(g, y)| g * y).collect()
    }

    /// `Σ λ·J(γ_i)` under the given effective loss.
    pub fn penalty(&self, spec: &EffectiveLossSpec) -> f64 {
        self.values.iter().map(|&g| spec.penalty(g)).sum()
    }
}

/// Soft thresholding: `γ̂_i = sgn(r_i)(|r_i| − λ)₊`.
pub fn gamma_l1_squared(r: &[f64], lambda_gamma: f64) -> GammaVector {
    GammaVector {
        values: r.iter().map(|&ri| soft_threshold(ri, lambda_gamma)).collect(),
        norm: GammaNorm::L1,
    }
}

#[inline]
pub fn soft_threshold(r: f64, t: f64) -> f64 {
    if r > t {
        r - t
    } else if r < -t {
        r + t
    } else {
        0.0
    }
}

/// ℓ1 adjustment for a strictly convex location family `g` with minimum at 0.
///
/// `gprime_inverse` is `g′⁻¹`; it is probed on `[−λ, λ]` and rejected when it
/// is not monotone or does not straddle zero.
pub fn gamma_l1_location<F: Fn(f64) -> f64>(
    gprime_inverse: F,
    r: &[f64],
    lambda_gamma: f64,
) -> Result<GammaVector> {
    const PROBES: usize = 9;
    let mut prev = f64::NEG_INFINITY;
    for k in 0..PROBES {
        let v = -lambda_gamma + 2.0 * lambda_gamma * k as f64 / (PROBES - 1) as f64;
        let x = gprime_inverse(v);
        if !x.is_finite() || x < prev {
            return Err(Error::Contract(format!(
                "g'^-1 is not monotone nondecreasing at v = {v}"
            )));
        }
        prev = x;
    }
    let lower = gprime_inverse(-lambda_gamma);
    let upper = gprime_inverse(lambda_gamma);
    if !(lower <= 0.0 && 0.0 <= upper) {
        return Err(Error::Contract(format!(
            "band [{lower}, {upper}] does not contain the minimum at zero"
        )));
    }
    let values = r
        .iter()
        .map(|&ri| {
            if ri > upper {
                ri - upper
            } else if ri < lower {
                ri - lower
            } else {
                0.0
            }
        })
        .collect();
    Ok(GammaVector { values, norm: GammaNorm::L1 })
}

/// Asymmetric ℓ2 adjustment of the check loss: the residual clipped to
/// `[−q/λ, (1−q)/λ]`.
pub fn gamma_l2_check(r: &[f64], q: f64, lambda_gamma: f64) -> GammaVector {
    GammaVector {
        values: r.iter().map(|&ri| clip_check(ri, q, lambda_gamma)).collect(),
        norm: GammaNorm::AsymmetricL2,
    }
}

#[inline]
fn clip_check(r: f64, q: f64, lam: f64) -> f64 {
    let lo = -q / lam;
    let hi = (1.0 - q) / lam;
    if r < lo {
        lo
    } else if r >= hi {
        hi
    } else {
        r
    }
}

/// ℓ1 adjustment of a decreasing convex margin loss; returns margin increases
/// `(g′⁻¹(−λ) − τ)₊`.
pub fn gamma_l1_margin<G: ConvexProfile>(
    curve: &G,
    tau: &[f64],
    lambda_gamma: f64,
) -> Result<GammaVector> {
    if let Some(limit) = curve.left_slope_limit() {
        if lambda_gamma >= -limit {
            return Err(Error::Config(format!(
                "lambda_gamma = {lambda_gamma} must be below {} for this margin loss",
                -limit
            )));
        }
    }
    let threshold = curve.deriv_inverse(-lambda_gamma)?;
    let values = tau
        .iter()
        .map(|&t| if t <= threshold { threshold - t } else { 0.0 })
        .collect();
    Ok(GammaVector { values, norm: GammaNorm::L1 })
}

/// ℓ2 adjustment of the hinge, in terms of the slack `ξ = 1 − τ`.
pub fn gamma_l2_hinge(xi: &[f64], lambda_gamma: f64) -> GammaVector {
    GammaVector {
        values: xi.iter().map(|&x| x.clamp(0.0, 1.0 / lambda_gamma)).collect(),
        norm: GammaNorm::L2,
    }
}

/// γ-step for any admissible effective loss, applied to residuals or margins
/// as appropriate for the base loss.
pub fn gamma_step(spec: &EffectiveLossSpec, u: &[f64]) -> GammaVector {
    GammaVector {
        values: u.iter().map(|&ui| gamma_scalar(spec, ui)).collect(),
        norm: spec.gamma_norm(),
    }
}

/// Scalar kernel shared by the vector routines and the loss module.
pub(crate) fn gamma_scalar(spec: &EffectiveLossSpec, u: f64) -> f64 {
    let lam = spec.lambda_gamma();
    match (spec.base(), spec.gamma_norm()) {
        (LossSpec::SquaredError, GammaNorm::L1) => soft_threshold(u, lam),
        (LossSpec::SquaredError, _) => u / (1.0 + lam),
        // ties at λ = 1 resolve to zero, the baseline
        (LossSpec::AbsoluteDeviation, GammaNorm::L1) => {
            if lam >= 1.0 {
                0.0
            } else {
                u
            }
        }
        (LossSpec::AbsoluteDeviation, _) => u.clamp(-1.0 / lam, 1.0 / lam),
        (LossSpec::Check(q), _) => clip_check(u, q.get(), lam),
        (LossSpec::Hinge, GammaNorm::L1) => {
            if lam >= 1.0 || u >= 1.0 {
                0.0
            } else {
                1.0 - u
            }
        }
        (LossSpec::Hinge, _) => (1.0 - u).clamp(0.0, 1.0 / lam),
        (LossSpec::LogisticDeviance, _) => margin_gap(margin_threshold(&LogisticCurve, lam), u),
        (LossSpec::Exponential, _) => margin_gap(margin_threshold(&ExponentialCurve, lam), u),
        (LossSpec::SquaredHinge, _) => margin_gap(margin_threshold(&SquaredHingeCurve, lam), u),
    }
}

#[inline]
fn margin_gap(threshold: f64, tau: f64) -> f64 {
    if tau <= threshold {
        threshold - tau
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{Quantile, SquaredCurve};

    /// Grid minimizer of `obj` over `[lo, hi]`.
    fn grid_argmin(obj: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        let mut best = (f64::INFINITY, lo);
        for k in 0..=n {
            let g = lo + k as f64 * step;
            let v = obj(g);
            if v < best.0 {
                best = (v, g);
            }
        }
        best.1
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(gamma_l1_squared(&[0.5], 1.0).values, [0.0]);
        assert_eq!(gamma_l1_squared(&[2.0], 1.0).values, [1.0]);
        let g = gamma_l1_squared(&[-3.0], 1.0).values[0];
        let oracle = grid_argmin(|g| 0.5 * (-3.0 - g) * (-3.0 - g) + g.abs(), -10.0, 10.0, 1e-4);
        assert!((g - oracle).abs() < 1e-3);
        assert_eq!(g, -2.0);
    }

    #[test]
    fn location_family_examples() {
        assert_eq!(gamma_l1_location(|v| v, &[2.0], 1.0).unwrap().values, [1.0]);
        assert_eq!(gamma_l1_location(|v| v, &[0.0], 3.7).unwrap().values, [0.0]);
        let quartic = gamma_l1_location(libm::cbrt, &[2.0], 1.0).unwrap().values[0];
        let oracle = grid_argmin(
            |g| {
                let d: f64 = 2.0 - g;
                d.powi(4) / 4.0 + g.abs()
            },
            -10.0,
            10.0,
            1e-4,
        );
        assert!((quartic - oracle).abs() < 1e-3);
        assert!((quartic - 1.0).abs() < 1e-12);
        // trait-based bisection agrees with the identity inverse
        let inv = |v: f64| SquaredCurve.deriv_inverse(v).unwrap();
        assert_eq!(gamma_l1_location(inv, &[-5.0], 2.0).unwrap().values, [-3.0]);
    }

    #[test]
    fn location_family_rejects_bad_inverse() {
        let err = gamma_l1_location(|v| -v, &[1.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let err = gamma_l1_location(|v| v + 5.0, &[1.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn check_examples() {
        assert_eq!(gamma_l2_check(&[1.0], 0.5, 2.0).values, [0.25]);
        assert_eq!(gamma_l2_check(&[0.1], 0.5, 2.0).values, [0.1]);
        let g = gamma_l2_check(&[-0.5], 0.2, 1.0).values[0];
        let q = 0.2;
        let oracle = grid_argmin(
            |g| {
                let r: f64 = -0.5 - g;
                let rho = if r >= 0.0 { q * r } else { (q - 1.0) * r };
                let j = if g >= 0.0 { q / (1.0 - q) * g * g } else { (1.0 - q) / q * g * g };
                rho + 0.5 * j
            },
            -10.0,
            10.0,
            1e-4,
        );
        assert!((g - oracle).abs() < 1e-3);
        assert!((g + 0.2).abs() < 1e-15);
    }

    #[test]
    fn margin_examples() {
        assert_eq!(gamma_l1_margin(&LogisticCurve, &[1.0], 0.5).unwrap().values, [0.0]);
        assert_eq!(gamma_l1_margin(&LogisticCurve, &[-1.0], 0.5).unwrap().values, [1.0]);
        assert_eq!(gamma_l1_margin(&ExponentialCurve, &[-1.0], 1.0).unwrap().values, [1.0]);
        assert!(gamma_l1_margin(&LogisticCurve, &[0.0], 1.0).is_err());
        // squared hinge: γ̂ = 1 − τ − λ/2
        let g = gamma_l1_margin(&SquaredHingeCurve, &[-0.5], 1.0).unwrap().values[0];
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(gamma_l2_hinge(&[-0.3], 2.0).values, [0.0]);
        assert_eq!(gamma_l2_hinge(&[0.8], 2.0).values, [0.5]);
        let g = gamma_l2_hinge(&[0.2], 2.0).values[0];
        let oracle = grid_argmin(|g| (0.2 - g).max(0.0) + g * g, -10.0, 10.0, 1e-4);
        assert!((g - oracle).abs() < 1e-3);
        assert_eq!(g, 0.2);
    }

    #[test]
    fn signed_margins_follow_labels() {
        let g = GammaVector { values: alloc::vec![0.0, 1.5, 2.0], norm: GammaNorm::L1 };
        assert_eq!(g.signed(&[1.0, -1.0, 1.0]), [0.0, -1.5, 2.0]);
        assert_eq!(g.adjusted_cases(), [1, 2]);
    }

    #[test]
    fn dispatcher_matches_named_routines() {
        let r = [-4.0, -0.3, 0.0, 0.2, 3.3];
        let q = Quantile::new(0.3).unwrap();
        let s = EffectiveLossSpec::new(LossSpec::Check(q), 1.7, GammaNorm::AsymmetricL2).unwrap();
        assert_eq!(gamma_step(&s, &r).values, gamma_l2_check(&r, 0.3, 1.7).values);
        let s = EffectiveLossSpec::new(LossSpec::SquaredError, 1.1, GammaNorm::L1).unwrap();
        assert_eq!(gamma_step(&s, &r).values, gamma_l1_squared(&r, 1.1).values);
        let s = EffectiveLossSpec::new(LossSpec::Hinge, 1.1, GammaNorm::L2).unwrap();
        let xi: Vec<f64> = r.iter().map(|t| 1.0 - t).collect();
        assert_eq!(gamma_step(&s, &r).values, gamma_l2_hinge(&xi, 1.1).values);
    }
}
