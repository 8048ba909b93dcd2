#![allow(dead_code)]

use caseparam_core::{Dataset, ResponseKind};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gaussian draw by Box–Muller, so the tests do not share sampling code with
/// the library.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn regression(seed: u64, n: usize, p: usize, intercept: bool) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| normal(&mut rng));
    let beta: Vec<f64> = (0..p).map(|j| 1.0 - 0.4 * j as f64).collect();
    let y = DVector::from_fn(n, |i, _| {
        1.0 + (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + normal(&mut rng)
    });
    Dataset::new(x, y, intercept, ResponseKind::Continuous).unwrap()
}

pub fn classification(seed: u64, n: usize, p: usize, flip: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let x = DMatrix::from_fn(n, p, |i, j| normal(&mut rng) + if j == 0 { y[i] } else { 0.0 });
    let y: Vec<f64> = y.iter().map(|&v| if rng.random::<f64>() < flip { -v } else { v }).collect();
    Dataset::new(x, DVector::from_vec(y), true, ResponseKind::BinaryPM1).unwrap()
}

/// Plain BFGS with backtracking; the reference minimizer for smooth or C¹
/// objectives in the tests.
pub fn bfgs(f: &dyn Fn(&[f64]) -> f64, grad: &dyn Fn(&[f64]) -> Vec<f64>, x0: Vec<f64>, tol: f64) -> Vec<f64> {
    let d = x0.len();
    let mut x = x0;
    let mut h = DMatrix::<f64>::identity(d, d);
    let mut g = DVector::from_vec(grad(&x));
    let mut fx = f(&x);
    for _ in 0..20_000 {
        if g.amax() <= tol {
            break;
        }
        let mut dir = -(&h * &g);
        if dir.dot(&g) >= 0.0 {
            h = DMatrix::identity(d, d);
            dir = -g.clone();
        }
        let mut t = 1.0;
        let mut xn;
        loop {
            xn = (0..d).map(|i| x[i] + t * dir[i]).collect::<Vec<_>>();
            if f(&xn) <= fx + 1e-4 * t * dir.dot(&g) || t < 1e-20 {
                break;
            }
            t *= 0.5;
        }
        let gn = DVector::from_vec(grad(&xn));
        let s = DVector::from_iterator(d, (0..d).map(|i| xn[i] - x[i]));
        let yv = &gn - &g;
        let sy = s.dot(&yv);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(d, d);
            h = (&i - rho * &s * yv.transpose()) * &h * (&i - rho * &yv * s.transpose()) + rho * &s * s.transpose();
        }
        if s.amax() == 0.0 {
            break;
        }
        x = xn;
        fx = f(&x);
        g = gn;
    }
    x
}
