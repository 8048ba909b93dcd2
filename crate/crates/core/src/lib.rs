//! Case-specific parameter regularization for loss-based estimation.
//!
//! Every observation gets its own shift parameter `γ_i`, penalized so that
//! the fit can absorb gross residuals (an ℓ1 penalty turns least squares into
//! Huber regression) or round off the corner of a piecewise-linear loss (an ℓ2
//! penalty makes quantile regression and the SVM more efficient). The crate
//! provides the loss families, the closed-form case adjustments, baseline
//! solvers, the alternating algorithm, tuning rules and model-selection
//! scores.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]

extern crate alloc;

pub mod alternation;
pub mod case_adjust;
pub mod data;
pub mod error;
pub mod features;
pub mod losses;
pub mod selection;
pub mod solvers;
pub mod tuning;

mod linalg;
mod newton;

pub use alternation::{
    alternate_fit, alternate_fit_from, equivalent_effective_fit, AlternationConfig, BetaPenalty,
    PenaltyConfig,
};
pub use case_adjust::GammaVector;
pub use data::{Dataset, FitResult, ResponseKind};
pub use error::{Error, Result};
pub use losses::{EffectiveLossSpec, GammaNorm, LossFamily, LossSpec, Quantile};
