use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

/// `Xᵀ diag(w) X`.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let d = x.ncols();
    let mut g = DMatrix::zeros(d, d);
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        for a in 0..d {
            let xa = wi * x[(i, a)];
            if xa == 0.0 {
                continue;
            }
            for b in a..d {
                g[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    g
}

/// Solves `A z = b` for symmetric positive definite `A`.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = a.cholesky()?;
    let z = chol.solve(b);
    z.iter().all(|v| v.is_finite()).then_some(z)
}

/// Like [`solve_spd`] but adds a growing multiple of the identity until the
/// factorization succeeds.
pub(crate) fn solve_regularized(mut a: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let scale = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut mu = 1e-12 * scale;
    loop {
        if let Some(z) = solve_spd(a.clone(), b) {
            return z;
        }
        for i in 0..a.nrows() {
            a[(i, i)] += mu;
        }
        mu *= 10.0;
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub(crate) fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
