//! Loss families, their γ-adjusted forms and their effective (profiled) forms.
//!
//! A regression loss is a function of the residual `r = y − f(x)`, a
//! classification loss a function of the margin `τ = y·f(x)`. Adding a case
//! parameter and minimizing it out gives the *effective loss*
//!
//! ```text
//! L_λ(u) = min_γ { L(adjust(u, γ)) + λ·J(γ) }
//! ```
//!
//! where `adjust(u, γ) = u − γ` for residuals and `u + γ` for margins (γ is
//! then the margin increase `y_i·γ_i ≥ 0`). The penalty convention is
//! `λ|γ|` for [`GammaNorm::L1`], `(λ/2)γ²` for [`GammaNorm::L2`] and
//! `(λ/2)·{q/(1−q)·γ₊² + (1−q)/q·γ₋²}` for [`GammaNorm::AsymmetricL2`].
//!
//! Squared error carries a ½ factor, `u²/2`, so ℓ1 soft-thresholding happens
//! at exactly `λ`. Under that convention the γ-adjusted (truncated) squared
//! loss levels off at `λ²/2`.

use alloc::format;
use core::fmt;

use crate::case_adjust;
use crate::error::{Error, Result};

/// Absolute bracketing tolerance used when inverting a derivative numerically.
pub const INVERT_TOL: f64 = 1e-12;

/// Probability level of a quantile, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Quantile(f64);

impl Quantile {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q < 1.0 {
            Ok(Self(q))
        } else {
            Err(Error::Config(format!("quantile level must lie in (0, 1), got {q}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// What the loss is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgumentKind {
    /// `r = y − f(x)`
    Residual,
    /// `τ = y·f(x)`
    Margin,
}

/// Loss family without its parameters; used for the admissibility table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossFamily {
    SquaredError,
    AbsoluteDeviation,
    Check,
    LogisticDeviance,
    Exponential,
    Hinge,
    SquaredHinge,
}

impl LossFamily {
    pub const ALL: [LossFamily; 7] = [
        LossFamily::SquaredError,
        LossFamily::AbsoluteDeviation,
        LossFamily::Check,
        LossFamily::LogisticDeviance,
        LossFamily::Exponential,
        LossFamily::Hinge,
        LossFamily::SquaredHinge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossFamily::SquaredError => "squared",
            LossFamily::AbsoluteDeviation => "absolute",
            LossFamily::Check => "check",
            LossFamily::LogisticDeviance => "logistic",
            LossFamily::Exponential => "exponential",
            LossFamily::Hinge => "hinge",
            LossFamily::SquaredHinge => "squared-hinge",
        }
    }

    pub fn argument_kind(self) -> ArgumentKind {
        match self {
            LossFamily::SquaredError | LossFamily::AbsoluteDeviation | LossFamily::Check => {
                ArgumentKind::Residual
            }
            _ => ArgumentKind::Margin,
        }
    }
}

impl fmt::Display for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully parameterized loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    /// `u²/2`
    SquaredError,
    /// `|u|`
    AbsoluteDeviation,
    /// `ρ_q(u) = q·u` for `u ≥ 0`, `−(1−q)·u` for `u < 0`
    Check(Quantile),
    /// `log(1 + e^{−τ})`
    LogisticDeviance,
    /// `e^{−τ}`
    Exponential,
    /// `(1 − τ)₊`
    Hinge,
    /// `{(1 − τ)₊}²`
    SquaredHinge,
}

impl LossSpec {
    pub fn family(&self) -> LossFamily {
        match self {
            LossSpec::SquaredError => LossFamily::SquaredError,
            LossSpec::AbsoluteDeviation => LossFamily::AbsoluteDeviation,
            LossSpec::Check(_) => LossFamily::Check,
            LossSpec::LogisticDeviance => LossFamily::LogisticDeviance,
            LossSpec::Exponential => LossFamily::Exponential,
            LossSpec::Hinge => LossFamily::Hinge,
            LossSpec::SquaredHinge => LossFamily::SquaredHinge,
        }
    }

    #[inline]
    pub fn argument_kind(&self) -> ArgumentKind {
        self.family().argument_kind()
    }

    /// Quantile level for [`LossSpec::Check`].
    pub fn quantile(&self) -> Option<Quantile> {
        match self {
            LossSpec::Check(q) => Some(*q),
            _ => None,
        }
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        loss_value(self, u)
    }

    /// Derivative, with the right derivative at kinks.
    pub fn deriv(&self, u: f64) -> f64 {
        match *self {
            LossSpec::SquaredError => u,
            LossSpec::AbsoluteDeviation => {
                if u >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            LossSpec::Check(q) => {
                if u >= 0.0 {
                    q.get()
                } else {
                    q.get() - 1.0
                }
            }
            LossSpec::LogisticDeviance => LogisticCurve.deriv(u),
            LossSpec::Exponential => ExponentialCurve.deriv(u),
            LossSpec::Hinge => {
                if u >= 1.0 {
                    0.0
                } else {
                    -1.0
                }
            }
            LossSpec::SquaredHinge => SquaredHingeCurve.deriv(u),
        }
    }
}

/// Evaluates the base loss at a residual or margin.
pub fn loss_value(spec: &LossSpec, u: f64) -> f64 {
    match *spec {
        LossSpec::SquaredError => 0.5 * u * u,
        LossSpec::AbsoluteDeviation => libm::fabs(u),
        LossSpec::Check(q) => check_loss(q.get(), u),
        LossSpec::LogisticDeviance => softplus(-u),
        LossSpec::Exponential => libm::exp(-u),
        LossSpec::Hinge => positive_part(1.0 - u),
        LossSpec::SquaredHinge => {
            let s = positive_part(1.0 - u);
            s * s
        }
    }
}

#[inline]
pub(crate) fn check_loss(q: f64, u: f64) -> f64 {
    if u >= 0.0 {
        q * u
    } else {
        (q - 1.0) * u
    }
}

#[inline]
pub(crate) fn positive_part(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// `log(1 + e^t)` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + libm::log1p(libm::exp(-t))
    } else {
        libm::log1p(libm::exp(t))
    }
}

/// Penalty applied to the case parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GammaNorm {
    L1,
    L2,
    AsymmetricL2,
}

impl GammaNorm {
    pub fn name(self) -> &'static str {
        match self {
            GammaNorm::L1 => "l1",
            GammaNorm::L2 => "l2",
            GammaNorm::AsymmetricL2 => "asym-l2",
        }
    }
}

impl fmt::Display for GammaNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Admissible `(loss, γ-norm)` pairs. The boolean marks combinations whose
/// adjustment leaves a piecewise-linear loss unchanged (the fit is the
/// baseline fit).
pub const ADMISSIBLE: [(LossFamily, GammaNorm, bool); 10] = [
    (LossFamily::SquaredError, GammaNorm::L1, false),
    (LossFamily::SquaredError, GammaNorm::L2, false),
    (LossFamily::AbsoluteDeviation, GammaNorm::L1, true),
    (LossFamily::AbsoluteDeviation, GammaNorm::L2, false),
    (LossFamily::Check, GammaNorm::AsymmetricL2, false),
    (LossFamily::LogisticDeviance, GammaNorm::L1, false),
    (LossFamily::Exponential, GammaNorm::L1, false),
    (LossFamily::Hinge, GammaNorm::L1, true),
    (LossFamily::Hinge, GammaNorm::L2, false),
    (LossFamily::SquaredHinge, GammaNorm::L1, false),
];

/// Human-readable admissibility table.
pub fn admissibility_table() -> alloc::string::String {
    let mut out = alloc::string::String::from("loss            gamma-norm  note\n");
    for (family, norm, noop) in ADMISSIBLE {
        let note = match (family, noop) {
            (_, true) => "no-op (piecewise-linear loss unchanged)",
            (LossFamily::LogisticDeviance, _) => "requires 0 < lambda_gamma < 1",
            _ => "",
        };
        out.push_str(&format!("{:<15} {:<11} {}\n", family.name(), norm.name(), note));
    }
    out
}

/// Base loss together with the penalty on its case parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveLossSpec {
    base: LossSpec,
    lambda_gamma: f64,
    gamma_norm: GammaNorm,
}

impl EffectiveLossSpec {
    pub fn new(base: LossSpec, lambda_gamma: f64, gamma_norm: GammaNorm) -> Result<Self> {
        if !(lambda_gamma > 0.0 && lambda_gamma.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_gamma must be positive and finite, got {lambda_gamma}"
            )));
        }
        if !ADMISSIBLE
            .iter()
            .any(|&(f, n, _)| f == base.family() && n == gamma_norm)
        {
            return Err(Error::Config(format!(
                "unsupported combination {} + {}; admissible pairs:\n{}",
                base.family(),
                gamma_norm,
                admissibility_table()
            )));
        }
        if base.family() == LossFamily::LogisticDeviance && lambda_gamma >= 1.0 {
            return Err(Error::Config(format!(
                "logistic deviance with l1 case penalty needs lambda_gamma < 1, got {lambda_gamma}"
            )));
        }
        Ok(Self { base, lambda_gamma, gamma_norm })
    }

    #[inline]
    pub fn base(&self) -> LossSpec {
        self.base
    }

    #[inline]
    pub fn lambda_gamma(&self) -> f64 {
        self.lambda_gamma
    }

    #[inline]
    pub fn gamma_norm(&self) -> GammaNorm {
        self.gamma_norm
    }

    /// True for the ℓ1 adjustment of a piecewise-linear loss.
    pub fn is_noop(&self) -> bool {
        ADMISSIBLE
            .iter()
            .any(|&(f, n, noop)| noop && f == self.base.family() && n == self.gamma_norm)
    }

    /// `λ·J(γ)` for a single case, in the convention of the module docs.
    pub fn penalty(&self, gamma: f64) -> f64 {
        let lam = self.lambda_gamma;
        match self.gamma_norm {
            GammaNorm::L1 => lam * libm::fabs(gamma),
            GammaNorm::L2 => 0.5 * lam * gamma * gamma,
            GammaNorm::AsymmetricL2 => {
                let q = self.base.quantile().map_or(0.5, Quantile::get);
                0.5 * lam * asymmetric_j2(q, gamma)
            }
        }
    }

    /// Residual or margin after adjustment by `gamma`.
    #[inline]
    pub fn adjusted_argument(&self, u: f64, gamma: f64) -> f64 {
        match self.base.argument_kind() {
            ArgumentKind::Residual => u - gamma,
            ArgumentKind::Margin => u + gamma,
        }
    }

    /// Optimal case parameter for one residual or margin.
    pub fn gamma_hat(&self, u: f64) -> f64 {
        case_adjust::gamma_scalar(self, u)
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        effective_loss_value(self, u)
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        effective_loss_deriv(self, u)
    }

    /// Generalized second derivative (right limit at knots); zero on linear
    /// pieces.
    pub fn second_deriv(&self, u: f64) -> f64 {
        let lam = self.lambda_gamma;
        match (self.base, self.gamma_norm) {
            (LossSpec::SquaredError, GammaNorm::L1) => {
                if libm::fabs(u) <= lam {
                    1.0
                } else {
                    0.0
                }
            }
            (LossSpec::SquaredError, _) => lam / (1.0 + lam),
            (LossSpec::AbsoluteDeviation, GammaNorm::L2) => {
                if libm::fabs(u) <= 1.0 / lam {
                    lam
                } else {
                    0.0
                }
            }
            (LossSpec::Check(q), _) => {
                let q = q.get();
                if u < -q / lam || u >= (1.0 - q) / lam {
                    0.0
                } else if u < 0.0 {
                    lam * (1.0 - q) / q
                } else {
                    lam * q / (1.0 - q)
                }
            }
            (LossSpec::Hinge, GammaNorm::L2) => {
                if u < 1.0 && u > 1.0 - 1.0 / lam {
                    lam
                } else {
                    0.0
                }
            }
            (LossSpec::LogisticDeviance, _) => {
                linearized_second(&LogisticCurve, lam, u)
            }
            (LossSpec::Exponential, _) => linearized_second(&ExponentialCurve, lam, u),
            (LossSpec::SquaredHinge, _) => linearized_second(&SquaredHingeCurve, lam, u),
            // piecewise linear no-op combinations
            _ => 0.0,
        }
    }

    /// Base loss evaluated at the γ̂-adjusted argument.
    #[inline]
    pub fn adjusted_loss(&self, u: f64) -> f64 {
        gamma_adjusted_loss(self, u)
    }
}

/// `q/(1−q)·γ₊² + (1−q)/q·γ₋²`
#[inline]
pub(crate) fn asymmetric_j2(q: f64, gamma: f64) -> f64 {
    if gamma >= 0.0 {
        q / (1.0 - q) * gamma * gamma
    } else {
        (1.0 - q) / q * gamma * gamma
    }
}

/// Closed-form profiled loss.
pub fn effective_loss_value(spec: &EffectiveLossSpec, u: f64) -> f64 {
    let lam = spec.lambda_gamma;
    match (spec.base, spec.gamma_norm) {
        (LossSpec::SquaredError, GammaNorm::L1) => huber(lam, u),
        (LossSpec::SquaredError, _) => 0.5 * lam / (1.0 + lam) * u * u,
        (LossSpec::AbsoluteDeviation, GammaNorm::L1) => lam.min(1.0) * libm::fabs(u),
        (LossSpec::AbsoluteDeviation, _) => {
            if libm::fabs(u) <= 1.0 / lam {
                0.5 * lam * u * u
            } else {
                libm::fabs(u) - 0.5 / lam
            }
        }
        (LossSpec::Check(q), _) => modified_check(q.get(), lam, u),
        (LossSpec::Hinge, GammaNorm::L1) => lam.min(1.0) * positive_part(1.0 - u),
        (LossSpec::Hinge, _) => {
            let knot = 1.0 - 1.0 / lam;
            if u >= 1.0 {
                0.0
            } else if u > knot {
                0.5 * lam * (1.0 - u) * (1.0 - u)
            } else {
                (1.0 - u) - 0.5 / lam
            }
        }
        (LossSpec::LogisticDeviance, _) => linearized_value(&LogisticCurve, lam, u),
        (LossSpec::Exponential, _) => linearized_value(&ExponentialCurve, lam, u),
        (LossSpec::SquaredHinge, _) => linearized_value(&SquaredHingeCurve, lam, u),
    }
}

/// Derivative of [`effective_loss_value`].
pub fn effective_loss_deriv(spec: &EffectiveLossSpec, u: f64) -> f64 {
    let lam = spec.lambda_gamma;
    match (spec.base, spec.gamma_norm) {
        (LossSpec::SquaredError, GammaNorm::L1) => u.clamp(-lam, lam),
        (LossSpec::SquaredError, _) => lam / (1.0 + lam) * u,
        (LossSpec::AbsoluteDeviation, GammaNorm::L1) => {
            lam.min(1.0) * if u >= 0.0 { 1.0 } else { -1.0 }
        }
        (LossSpec::AbsoluteDeviation, _) => (lam * u).clamp(-1.0, 1.0),
        (LossSpec::Check(q), _) => modified_check_psi(q.get(), lam, u),
        (LossSpec::Hinge, GammaNorm::L1) => {
            if u >= 1.0 {
                0.0
            } else {
                -lam.min(1.0)
            }
        }
        (LossSpec::Hinge, _) => {
            if u >= 1.0 {
                0.0
            } else {
                (-lam * (1.0 - u)).max(-1.0)
            }
        }
        (LossSpec::LogisticDeviance, _) => linearized_deriv(&LogisticCurve, lam, u),
        (LossSpec::Exponential, _) => linearized_deriv(&ExponentialCurve, lam, u),
        (LossSpec::SquaredHinge, _) => linearized_deriv(&SquaredHingeCurve, lam, u),
    }
}

/// Base loss at the adjusted argument, i.e. the effective loss minus the
/// penalty paid for `γ̂`.
pub fn gamma_adjusted_loss(spec: &EffectiveLossSpec, u: f64) -> f64 {
    let g = case_adjust::gamma_scalar(spec, u);
    spec.base.value(spec.adjusted_argument(u, g))
}

/// Huber's loss with threshold `k`.
#[inline]
pub fn huber(k: f64, u: f64) -> f64 {
    let a = libm::fabs(u);
    if a <= k {
        0.5 * u * u
    } else {
        k * a - 0.5 * k * k
    }
}

/// `ρ_q^γ`: the check loss with its corner replaced by two half-parabolas on
/// `[−q/λ, (1−q)/λ)`.
pub fn modified_check(q: f64, lam: f64, r: f64) -> f64 {
    let offset = q * (1.0 - q) / (2.0 * lam);
    if r < -q / lam {
        (q - 1.0) * r - offset
    } else if r < 0.0 {
        0.5 * lam * (1.0 - q) / q * r * r
    } else if r < (1.0 - q) / lam {
        0.5 * lam * q / (1.0 - q) * r * r
    } else {
        q * r - offset
    }
}

/// `ψ_q^γ`, the derivative of [`modified_check`].
pub fn modified_check_psi(q: f64, lam: f64, r: f64) -> f64 {
    if r < -q / lam {
        q - 1.0
    } else if r < 0.0 {
        lam * (1.0 - q) / q * r
    } else if r < (1.0 - q) / lam {
        lam * q / (1.0 - q) * r
    } else {
        q
    }
}

/// Convex scalar function with an invertible derivative.
///
/// Used both for location-family negative log-likelihoods `g(r)` and for
/// margin losses `g(τ)`.
pub trait ConvexProfile {
    fn value(&self, u: f64) -> f64;
    fn deriv(&self, u: f64) -> f64;
    fn second_deriv(&self, u: f64) -> f64;

    /// `g′⁻¹(v)`; the default brackets and bisects.
    fn deriv_inverse(&self, v: f64) -> Result<f64> {
        invert_increasing(|u| self.deriv(u), v, INVERT_TOL)
    }

    /// `lim_{u→−∞} g′(u)` when finite.
    fn left_slope_limit(&self) -> Option<f64> {
        None
    }
}

/// Solves `f(x) = v` for nondecreasing `f` by bisection on a bracket
/// `[−B, B]` grown geometrically from `B = 1`.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, v: f64, tol: f64) -> Result<f64> {
    let mut bound = 1.0_f64;
    loop {
        if f(-bound) <= v && v <= f(bound) {
            break;
        }
        bound *= 2.0;
        if bound > 1e300 {
            return Err(Error::Contract(format!(
                "derivative never reaches {v}; cannot bracket its inverse"
            )));
        }
    }
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..4096 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        if f(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `log(1 + e^{−τ})`
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticCurve;

impl ConvexProfile for LogisticCurve {
    fn value(&self, u: f64) -> f64 {
        softplus(-u)
    }
    fn deriv(&self, u: f64) -> f64 {
        -sigmoid(-u)
    }
    fn second_deriv(&self, u: f64) -> f64 {
        let s = sigmoid(u);
        s * (1.0 - s)
    }
    fn deriv_inverse(&self, v: f64) -> Result<f64> {
        // −1/(1+e^τ) = v  ⇔  τ = log((1+v)/(−v)), for −1 < v < 0
        if v > -1.0 && v < 0.0 {
            Ok(libm::log((1.0 + v) / -v))
        } else {
            Err(Error::Config(format!("logistic slope {v} outside (-1, 0)")))
        }
    }
    fn left_slope_limit(&self) -> Option<f64> {
        Some(-1.0)
    }
}

#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

/// `e^{−τ}`
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialCurve;

impl ConvexProfile for ExponentialCurve {
    fn value(&self, u: f64) -> f64 {
        libm::exp(-u)
    }
    fn deriv(&self, u: f64) -> f64 {
        -libm::exp(-u)
    }
    fn second_deriv(&self, u: f64) -> f64 {
        libm::exp(-u)
    }
    fn deriv_inverse(&self, v: f64) -> Result<f64> {
        if v < 0.0 {
            Ok(-libm::log(-v))
        } else {
            Err(Error::Config(format!("exponential slope {v} must be negative")))
        }
    }
}

/// `{(1 − τ)₊}²`
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredHingeCurve;

impl ConvexProfile for SquaredHingeCurve {
    fn value(&self, u: f64) -> f64 {
        let s = positive_part(1.0 - u);
        s * s
    }
    fn deriv(&self, u: f64) -> f64 {
        -2.0 * positive_part(1.0 - u)
    }
    fn second_deriv(&self, u: f64) -> f64 {
        if u < 1.0 {
            2.0
        } else {
            0.0
        }
    }
    fn deriv_inverse(&self, v: f64) -> Result<f64> {
        if v < 0.0 {
            Ok(1.0 + 0.5 * v)
        } else {
            Err(Error::Config(format!("squared hinge slope {v} must be negative")))
        }
    }
}

/// `u²/2`, the location family behind least squares.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredCurve;

impl ConvexProfile for SquaredCurve {
    fn value(&self, u: f64) -> f64 {
        0.5 * u * u
    }
    fn deriv(&self, u: f64) -> f64 {
        u
    }
    fn second_deriv(&self, _u: f64) -> f64 {
        1.0
    }
    fn deriv_inverse(&self, v: f64) -> Result<f64> {
        Ok(v)
    }
}

/// Threshold `g′⁻¹(−λ)` below which a margin loss gets linearized.
///
/// The three built-in curves all have closed-form inverses, so this is
/// infallible for admissible `λ`.
pub(crate) fn margin_threshold<G: ConvexProfile>(curve: &G, lam: f64) -> f64 {
    curve.deriv_inverse(-lam).unwrap_or(f64::NEG_INFINITY)
}

/// Effective margin loss: `g` above the threshold, its tangent line of slope
/// `−λ` below it.
pub fn linearized_value<G: ConvexProfile>(curve: &G, lam: f64, tau: f64) -> f64 {
    let t = margin_threshold(curve, lam);
    if tau > t {
        curve.value(tau)
    } else {
        curve.value(t) + lam * (t - tau)
    }
}

pub fn linearized_deriv<G: ConvexProfile>(curve: &G, lam: f64, tau: f64) -> f64 {
    let t = margin_threshold(curve, lam);
    if tau > t {
        curve.deriv(tau)
    } else {
        -lam
    }
}

fn linearized_second<G: ConvexProfile>(curve: &G, lam: f64, tau: f64) -> f64 {
    let t = margin_threshold(curve, lam);
    if tau > t {
        curve.second_deriv(tau)
    } else {
        0.0
    }
}
