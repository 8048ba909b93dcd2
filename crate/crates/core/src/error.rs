use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Inadmissible option or option combination.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data violates a precondition (NaN, wrong label coding, shape).
    #[error("invalid data: {0}")]
    InvalidData(String),
    /// Normal equations are singular and no ridge term was requested.
    #[error("design matrix is rank deficient")]
    RankDeficient,
    /// Iteration budget exhausted; `trace` holds the objective values seen.
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize, trace: Vec<f64> },
    /// The alternating algorithm increased its objective, which a correct
    /// block update can never do.
    #[error("objective increased by {increase:e} at outer iteration {iteration}")]
    ObjectiveIncrease { iteration: usize, increase: f64 },
    /// Coefficients ran off to infinity (complete separation).
    #[error("divergence: {0}")]
    Divergence(String),
    /// A user-supplied map broke its documented contract.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Residual scale estimate is zero.
    #[error("degenerate scale: residuals have zero spread")]
    DegenerateScale,
}

pub type Result<T> = core::result::Result<T, Error>;
