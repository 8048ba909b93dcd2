//! Damped Newton with Armijo backtracking for objectives of the form
//! `Σ wᵢ φ(aᵢ(θ)) + (λ/2)‖β‖²`, where `aᵢ` is a residual or a margin that is
//! affine in `θ`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, solve_regularized, weighted_gram};
use crate::losses::{
    asymmetric_j2, ArgumentKind, EffectiveLossSpec, ExponentialCurve, LogisticCurve, LossSpec,
    SquaredHingeCurve, ConvexProfile,
};
use crate::solvers::SolverConfig;

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
pub(crate) const DIVERGENCE_BOUND: f64 = 1e6;

/// Scalar convex loss with the curvature used to build the Newton metric.
pub(crate) trait ScalarLoss {
    fn value(&self, a: f64) -> f64;
    fn deriv(&self, a: f64) -> f64;
    fn weight(&self, a: f64) -> f64;
}

impl ScalarLoss for LossSpec {
    fn value(&self, a: f64) -> f64 {
        LossSpec::value(self, a)
    }
    fn deriv(&self, a: f64) -> f64 {
        LossSpec::deriv(self, a)
    }
    fn weight(&self, a: f64) -> f64 {
        match self {
            LossSpec::SquaredError => 1.0,
            LossSpec::LogisticDeviance => LogisticCurve.second_deriv(a),
            LossSpec::Exponential => ExponentialCurve.second_deriv(a),
            LossSpec::SquaredHinge => SquaredHingeCurve.second_deriv(a),
            _ => 0.0,
        }
    }
}

impl ScalarLoss for EffectiveLossSpec {
    fn value(&self, a: f64) -> f64 {
        EffectiveLossSpec::value(self, a)
    }
    fn deriv(&self, a: f64) -> f64 {
        EffectiveLossSpec::deriv(self, a)
    }
    /// IRLS weight `ψ(r)/r` for residual losses, capped at the curvature of
    /// the quadratic band; generalized second derivative for margin losses.
    fn weight(&self, a: f64) -> f64 {
        match self.base().argument_kind() {
            ArgumentKind::Residual => {
                let cap = self.second_deriv(0.0).max(self.second_deriv(-1e-300));
                if a == 0.0 {
                    cap
                } else {
                    (self.deriv(a) / a).clamp(0.0, cap)
                }
            }
            ArgumentKind::Margin => self.second_deriv(a),
        }
    }
}

/// `(λ/2)·J(a)` with the asymmetric quadratic `J` of level `q`; `q = 0.5`
/// gives `(λ/2)a²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AsymmetricSquare {
    pub q: f64,
    pub lam: f64,
}

impl ScalarLoss for AsymmetricSquare {
    fn value(&self, a: f64) -> f64 {
        0.5 * self.lam * asymmetric_j2(self.q, a)
    }
    fn deriv(&self, a: f64) -> f64 {
        self.weight(a) * a
    }
    fn weight(&self, a: f64) -> f64 {
        let ratio = if a >= 0.0 { self.q / (1.0 - self.q) } else { (1.0 - self.q) / self.q };
        self.lam * ratio
    }
}

/// Linear-model objective over `θ = (intercept?, β)`.
pub(crate) struct Problem<'a, L: ScalarLoss> {
    /// `n × d` design including the intercept column when present.
    pub design: &'a DMatrix<f64>,
    pub y: &'a [f64],
    pub kind: ArgumentKind,
    pub loss: &'a L,
    /// Residual: `aᵢ = yᵢ − oᵢ − x̃ᵢθ`. Margin: `aᵢ = yᵢ·x̃ᵢθ + oᵢ`.
    pub offsets: Option<&'a [f64]>,
    pub weights: Option<&'a [f64]>,
    pub ridge: f64,
    /// Index of the first penalized coordinate (1 with an intercept).
    pub first_penalized: usize,
}

pub(crate) struct Outcome {
    pub theta: DVector<f64>,
    pub trace: Vec<f64>,
    pub iterations: usize,
}

impl<L: ScalarLoss> Problem<'_, L> {
    pub fn arguments(&self, theta: &DVector<f64>) -> Vec<f64> {
        let f = self.design * theta;
        (0..self.y.len())
            .map(|i| {
                let o = self.offsets.map_or(0.0, |o| o[i]);
                match self.kind {
                    ArgumentKind::Residual => self.y[i] - o - f[i],
                    ArgumentKind::Margin => self.y[i] * f[i] + o,
                }
            })
            .collect()
    }

    fn weight_of(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn ridge_value(&self, theta: &DVector<f64>) -> f64 {
        let s: f64 = theta.iter().skip(self.first_penalized).map(|t| t * t).sum();
        0.5 * self.ridge * s
    }

    pub fn value(&self, theta: &DVector<f64>) -> f64 {
        let a = self.arguments(theta);
        let data: f64 = a.iter().enumerate().map(|(i, &ai)| self.weight_of(i) * self.loss.value(ai)).sum();
        data + self.ridge_value(theta)
    }

    /// `∂aᵢ/∂θ = sᵢ x̃ᵢ`.
    fn sign(&self, i: usize) -> f64 {
        match self.kind {
            ArgumentKind::Residual => -1.0,
            ArgumentKind::Margin => self.y[i],
        }
    }

    pub fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        let a = self.arguments(theta);
        let coef = DVector::from_iterator(
            a.len(),
            a.iter().enumerate().map(|(i, &ai)| self.weight_of(i) * self.loss.deriv(ai) * self.sign(i)),
        );
        let mut g = self.design.tr_mul(&coef);
        for j in self.first_penalized..g.len() {
            g[j] += self.ridge * theta[j];
        }
        g
    }

    fn metric(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let a = self.arguments(theta);
        let w: Vec<f64> = a.iter().enumerate().map(|(i, &ai)| self.weight_of(i) * self.loss.weight(ai)).collect();
        let mut h = weighted_gram(self.design, &w);
        for j in self.first_penalized..h.nrows() {
            h[(j, j)] += self.ridge;
        }
        h
    }

    /// True when `θ` separates the classes and every loss term still
    /// decreases along `θ`, so no finite minimizer exists.
    fn separated(&self, theta: &DVector<f64>) -> bool {
        if self.kind != ArgumentKind::Margin || self.ridge > 0.0 {
            return false;
        }
        let f = self.design * theta;
        let a = self.arguments(theta);
        (0..a.len()).all(|i| self.y[i] * f[i] > 0.0 && self.loss.deriv(a[i]) < 0.0)
    }

    /// Minimizes from `theta0`. Stops when the gradient sup-norm falls below
    /// `grad_tol·(1 + |F|)` or when no representable decrease remains.
    pub fn minimize(&self, theta0: DVector<f64>, cfg: &SolverConfig) -> Result<Outcome> {
        let mut theta = theta0;
        let mut f = self.value(&theta);
        let mut trace = vec![f];
        for it in 0..cfg.max_iter {
            let g = self.gradient(&theta);
            if norm_inf(&g) <= cfg.grad_tol * (1.0 + f.abs()) {
                return Ok(Outcome { theta, trace, iterations: it });
            }
            let d = -solve_regularized(self.metric(&theta), &g);
            let slope = g.dot(&d);
            if !(slope < 0.0) || -slope <= 1e-15 * (1.0 + f.abs()) {
                return Ok(Outcome { theta, trace, iterations: it });
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let cand = &theta + t * &d;
                let fc = self.value(&cand);
                if fc <= f + ARMIJO_C * t * slope {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            match accepted {
                Some((cand, fc)) => {
                    let stalled = f - fc <= 1e-16 * (1.0 + f.abs());
                    theta = cand;
                    f = fc;
                    trace.push(f);
                    if norm_inf(&theta) > DIVERGENCE_BOUND || self.separated(&theta) {
                        return Err(Error::Divergence(alloc::format!(
                            "classes are separated or coefficients exceeded {DIVERGENCE_BOUND:e} \
                             after {} iterations",
                            it + 1
                        )));
                    }
                    if stalled {
                        return Ok(Outcome { theta, trace, iterations: it + 1 });
                    }
                }
                None => return Ok(Outcome { theta, trace, iterations: it }),
            }
        }
        Err(Error::NonConvergence { iterations: cfg.max_iter, trace })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{GammaNorm, Quantile};

    fn design() -> DMatrix<f64> {
        DMatrix::from_fn(12, 3, |i, j| if j == 0 { 1.0 } else { libm::sin((i * (j + 3)) as f64) })
    }

    fn fd_gradient<L: ScalarLoss>(p: &Problem<'_, L>, theta: &DVector<f64>) -> DVector<f64> {
        let h = 1e-6;
        DVector::from_iterator(
            theta.len(),
            (0..theta.len()).map(|j| {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[j] += h;
                dn[j] -= h;
                (p.value(&up) - p.value(&dn)) / (2.0 * h)
            }),
        )
    }

    #[test]
    fn gradients_match_finite_differences() {
        let x = design();
        let yr: Vec<f64> = (0..12).map(|i| libm::cos(i as f64) * 2.0).collect();
        let yl: Vec<f64> = (0..12).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let theta = DVector::from_row_slice(&[0.3, -0.7, 1.1]);
        let huber = EffectiveLossSpec::new(LossSpec::SquaredError, 0.8, GammaNorm::L1).unwrap();
        let check = EffectiveLossSpec::new(
            LossSpec::Check(Quantile::new(0.3).unwrap()),
            1.5,
            GammaNorm::AsymmetricL2,
        )
        .unwrap();
        let hinge = EffectiveLossSpec::new(LossSpec::Hinge, 2.0, GammaNorm::L2).unwrap();
        let logistic = LossSpec::LogisticDeviance;
        let cases: [&dyn Fn() -> (DVector<f64>, DVector<f64>); 4] = [
            &|| {
                let p = Problem { design: &x, y: &yr, kind: ArgumentKind::Residual, loss: &huber, offsets: None, weights: None, ridge: 0.2, first_penalized: 1 };
                (p.gradient(&theta), fd_gradient(&p, &theta))
            },
            &|| {
                let p = Problem { design: &x, y: &yr, kind: ArgumentKind::Residual, loss: &check, offsets: None, weights: None, ridge: 0.0, first_penalized: 1 };
                (p.gradient(&theta), fd_gradient(&p, &theta))
            },
            &|| {
                let p = Problem { design: &x, y: &yl, kind: ArgumentKind::Margin, loss: &hinge, offsets: None, weights: None, ridge: 0.1, first_penalized: 1 };
                (p.gradient(&theta), fd_gradient(&p, &theta))
            },
            &|| {
                let off: Vec<f64> = (0..12).map(|i| 0.1 * i as f64).collect();
                let p = Problem { design: &x, y: &yl, kind: ArgumentKind::Margin, loss: &logistic, offsets: Some(&off), weights: None, ridge: 0.0, first_penalized: 1 };
                (p.gradient(&theta), fd_gradient(&p, &theta))
            },
        ];
        for case in cases {
            let (g, fd) = case();
            assert!((g - &fd).norm() <= 1e-5 * (1.0 + fd.norm()));
        }
    }

    #[test]
    fn least_squares_in_one_step() {
        let x = design();
        let y: Vec<f64> = (0..12).map(|i| 1.0 + 0.5 * x[(i, 1)] - 2.0 * x[(i, 2)]).collect();
        let loss = LossSpec::SquaredError;
        let p = Problem { design: &x, y: &y, kind: ArgumentKind::Residual, loss: &loss, offsets: None, weights: None, ridge: 0.0, first_penalized: 1 };
        let out = p.minimize(DVector::zeros(3), &SolverConfig::default()).unwrap();
        assert!((out.theta - DVector::from_row_slice(&[1.0, 0.5, -2.0])).norm() < 1e-10);
        assert!(out.iterations <= 2);
    }

    #[test]
    fn separation_triggers_divergence_guard() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, -2.0, 1.0, -1.0, 1.0, 1.0, 1.0, 2.0]);
        let y = [-1.0, -1.0, 1.0, 1.0];
        let loss = LossSpec::LogisticDeviance;
        let p = Problem { design: &x, y: &y, kind: ArgumentKind::Margin, loss: &loss, offsets: None, weights: None, ridge: 0.0, first_penalized: 1 };
        let cfg = SolverConfig { grad_tol: 0.0, ..SolverConfig::default() };
        assert!(matches!(p.minimize(DVector::zeros(2), &cfg), Err(Error::Divergence(_))));
    }
}
