//! Column standardization and natural cubic regression splines.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Per-column affine map `z = (x − mean) / scale` with population scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    /// Applies the stored transform to new raw rows.
    pub fn apply(&self, x_raw: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = x_raw.clone();
        for (j, mut col) in z.column_iter_mut().enumerate() {
            col.add_scalar_mut(-self.means[j]);
            col /= self.scales[j];
        }
        z
    }

    /// Coefficients on the standardized scale to `(β_raw, intercept_raw)`.
    pub fn back_transform(&self, beta: &DVector<f64>, intercept: f64) -> (DVector<f64>, f64) {
        let raw = DVector::from_iterator(
            beta.len(),
            beta.iter().zip(&self.scales).map(|(b, s)| b / s),
        );
        let shift: f64 = raw.iter().zip(&self.means).map(|(b, m)| b * m).sum();
        (raw, intercept - shift)
    }
}

/// Centers each column and divides by its population standard deviation.
///
/// Fails on a constant column, naming it by index.
pub fn standardize(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Standardization)> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::InvalidData("cannot standardize an empty design".into()));
    }
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    for (j, col) in x.column_iter().enumerate() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = libm::sqrt(var);
        if !(sd > 1e-12 * (1.0 + libm::fabs(mean))) {
            return Err(Error::InvalidData(format!("column {j} is constant")));
        }
        means.push(mean);
        scales.push(sd);
    }
    let st = Standardization { means, scales };
    Ok((st.apply(x), st))
}

/// Natural cubic spline basis: cubic between knots, linear beyond the
/// boundary knots. The intercept is not part of the basis, so the basis has
/// `interior knots + 1` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    knots: Vec<f64>,
    boundary: (f64, f64),
}

impl SplineBasis {
    pub fn new(knots: Vec<f64>, boundary: (f64, f64)) -> Result<Self> {
        if !(boundary.0 < boundary.1) {
            return Err(Error::Config("boundary knots must be increasing".into()));
        }
        let inside = knots.iter().all(|&k| k > boundary.0 && k < boundary.1);
        let increasing = knots.windows(2).all(|w| w[0] < w[1]);
        if !inside || !increasing {
            return Err(Error::Config(
                "interior knots must be strictly increasing and strictly inside the boundary".into(),
            ));
        }
        Ok(Self { knots, boundary })
    }

    /// Interior knots at the `k/(count+1)` sample quantiles of `x`, boundary
    /// at the range of `x`.
    pub fn at_quantiles(x: &[f64], count: usize) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidData("need at least two points to place knots".into()));
        }
        let mut sorted: Vec<f64> = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        let knots = (1..=count)
            .map(|k| quantile_sorted(&sorted, k as f64 / (count + 1) as f64))
            .collect();
        Self::new(knots, (lo, hi))
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn boundary(&self) -> (f64, f64) {
        self.boundary
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.knots.len() + 1
    }

    /// All knots, boundary included, mapped to `[0, 1]`.
    fn unit_knots(&self) -> Vec<f64> {
        let (a, b) = self.boundary;
        core::iter::once(0.0)
            .chain(self.knots.iter().map(|k| (k - a) / (b - a)))
            .chain(core::iter::once(1.0))
            .collect()
    }

    /// Basis row at one point.
    pub fn evaluate(&self, x: f64) -> Vec<f64> {
        let (a, b) = self.boundary;
        let t = (x - a) / (b - a);
        let xi = self.unit_knots();
        let k = xi.len();
        let d = |j: usize| (cube_plus(t - xi[j]) - cube_plus(t - xi[k - 1])) / (xi[k - 1] - xi[j]);
        let last = d(k - 2);
        let mut row = Vec::with_capacity(self.dimension());
        row.push(t);
        for j in 0..k - 2 {
            row.push(d(j) - last);
        }
        row
    }
}

#[inline]
fn cube_plus(t: f64) -> f64 {
    if t > 0.0 {
        t * t * t
    } else {
        0.0
    }
}

/// Linear-interpolation sample quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = libm::floor(pos) as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// `n × dimension` design of the natural spline basis evaluated at `x`.
pub fn natural_spline_design(x: &[f64], basis: &SplineBasis) -> DMatrix<f64> {
    let dim = basis.dimension();
    let mut out = DMatrix::zeros(x.len(), dim);
    for (i, &xi) in x.iter().enumerate() {
        for (j, v) in basis.evaluate(xi).into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn standardize_is_idempotent() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 30.0, 4.0, 20.0, 7.0, 0.0]);
        let (z, _) = standardize(&x).unwrap();
        let (z2, st2) = standardize(&z).unwrap();
        assert!((z - z2).abs().max() < 1e-12);
        for (m, s) in st2.means.iter().zip(&st2.scales) {
            assert!(m.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_is_affine_invariant() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 4.0, 2.0]);
        let y = x.map(|v| 3.0 * v - 7.0);
        let (zx, _) = standardize(&x).unwrap();
        let (zy, _) = standardize(&y).unwrap();
        assert!((zx - zy).abs().max() < 1e-12);
    }

    #[test]
    fn constant_column_is_named() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        match standardize(&x) {
            Err(Error::InvalidData(msg)) => assert!(msg.contains("column 1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn back_transform_reproduces_raw_predictions() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 30.0, 4.0, 20.0, 7.0, 0.0]);
        let (z, st) = standardize(&x).unwrap();
        let beta = DVector::from_vec(vec![0.7, -1.3]);
        let b0 = 2.5;
        let (raw, raw0) = st.back_transform(&beta, b0);
        let pred_std = &z * &beta;
        let pred_raw = &x * &raw;
        for i in 0..4 {
            assert!((pred_std[i] + b0 - pred_raw[i] - raw0).abs() < 1e-10);
        }
    }

    #[test]
    fn spline_dimension_and_validation() {
        let basis = SplineBasis::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], (0.0, 7.0)).unwrap();
        assert_eq!(basis.dimension(), 7);
        assert_eq!(natural_spline_design(&[0.5, 3.3], &basis).shape(), (2, 7));
        assert!(SplineBasis::new(vec![2.0, 1.0], (0.0, 3.0)).is_err());
        assert!(SplineBasis::new(vec![3.0], (0.0, 3.0)).is_err());
    }

    #[test]
    fn spline_is_linear_beyond_boundary() {
        let basis = SplineBasis::new(vec![0.3, 0.5, 0.8], (0.0, 1.0)).unwrap();
        let coef = [0.4, -1.0, 2.0, 0.5];
        let f = |x: f64| basis.evaluate(x).iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
        let h = 1e-3;
        for &x in &[1.5, 2.0, -0.5, -1.0] {
            let second = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            assert!(second.abs() < 1e-6, "f''({x}) = {second}");
        }
    }

    #[test]
    fn quantile_knots_are_interior() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let basis = SplineBasis::at_quantiles(&x, 6).unwrap();
        assert_eq!(basis.knots().len(), 6);
        assert_eq!(basis.boundary(), (0.0, 4.9));
    }
}
