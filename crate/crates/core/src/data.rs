//! Datasets and fit results.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::case_adjust::GammaVector;
use crate::error::{Error, Result};
use crate::features::{standardize, Standardization};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Continuous,
    /// Labels coded −1/+1.
    BinaryPM1,
}

/// Design matrix and response.
///
/// When built through [`Dataset::standardized`] the columns have mean 0 and
/// population standard deviation 1 and the transform is kept for mapping
/// coefficients back to the raw scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    intercept: bool,
    response_kind: ResponseKind,
    standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        intercept: bool,
        response_kind: ResponseKind,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::InvalidData(format!(
                "design has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::InvalidData("dataset has no cases".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("design or response contains NaN/Inf".into()));
        }
        if response_kind == ResponseKind::BinaryPM1 && y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidData("binary response must be coded -1/+1".into()));
        }
        Ok(Self { x, y, intercept, response_kind, standardization: None })
    }

    /// Standardizes the columns of `x_raw` before storing them.
    pub fn standardized(
        x_raw: DMatrix<f64>,
        y: DVector<f64>,
        intercept: bool,
        response_kind: ResponseKind,
    ) -> Result<Self> {
        let (x, st) = standardize(&x_raw)?;
        let mut data = Self::new(x, y, intercept, response_kind)?;
        data.standardization = Some(st);
        Ok(data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    #[inline]
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    #[inline]
    pub fn intercept(&self) -> bool {
        self.intercept
    }

    #[inline]
    pub fn response_kind(&self) -> ResponseKind {
        self.response_kind
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Same design, different response (pseudo-responses in the alternating
    /// algorithm). Label checks are skipped; the response kind is kept.
    pub fn with_response(&self, y: DVector<f64>) -> Self {
        debug_assert_eq!(y.len(), self.n());
        Self { y, ..self.clone() }
    }

    /// Rows `idx`, keeping the standardization of the parent.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let x = self.x.select_rows(idx.iter());
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        Self { x, y, ..self.clone() }
    }

    /// Number of fitted coefficients including the intercept.
    #[inline]
    pub fn dim(&self) -> usize {
        self.p() + usize::from(self.intercept)
    }

    /// `[1 X]` when an intercept is fitted, `X` otherwise.
    pub fn design(&self) -> DMatrix<f64> {
        if self.intercept {
            self.x.clone().insert_column(0, 1.0)
        } else {
            self.x.clone()
        }
    }
}

/// Output of every fitter.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub intercept: f64,
    pub gamma: Option<GammaVector>,
    /// Objective values in iteration order; nonincreasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub lambda_beta: f64,
    pub lambda_gamma: Option<f64>,
}

impl FitResult {
    pub(crate) fn from_theta(theta: &DVector<f64>, intercept: bool) -> (DVector<f64>, f64) {
        if intercept {
            (theta.rows(1, theta.len() - 1).into_owned(), theta[0])
        } else {
            (theta.clone(), 0.0)
        }
    }

    /// Coefficient vector stacked as `(intercept, β)` when the data has an
    /// intercept.
    pub fn theta(&self, intercept: bool) -> DVector<f64> {
        if intercept {
            self.beta.clone().insert_row(0, self.intercept)
        } else {
            self.beta.clone()
        }
    }

    /// `intercept + Xβ` on the scale of the design the model was fitted on.
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut f = x * &self.beta;
        f.add_scalar_mut(self.intercept);
        f
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(self.beta.iter()).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }

    /// Number of nonzero slope coefficients.
    pub fn df(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}
