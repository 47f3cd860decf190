//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scaffold_gait::gp::{Dataset, KernelParams, Point};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng) -> Point {
    std::array::from_fn(|_| rng.random::<f64>())
}

/// `n` random points with targets from a smooth function plus jitter.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let xs: Vec<Point> = (0..n).map(|_| random_point(rng)).collect();
    let ys = xs.iter().map(|x| (3.0 * x[0]).sin() + x[1] * x[2] - 0.5 * x[4] + 0.1 * rng.random::<f64>()).collect();
    Dataset::new(xs, ys).unwrap()
}

pub fn random_kernel(rng: &mut ChaCha8Rng) -> KernelParams {
    KernelParams {
        signal_variance: rng.random_range(0.3..3.0),
        length_scales: std::array::from_fn(|_| rng.random_range(0.2..1.0)),
        noise_variance: rng.random_range(1e-4..1e-2),
    }
}

fn k(a: &Point, b: &Point, kp: &KernelParams) -> f64 {
    let mut s = 0.0;
    for d in 0..a.len() {
        s += ((a[d] - b[d]) / kp.length_scales[d]).powi(2);
    }
    kp.signal_variance * (-0.5 * s).exp()
}

/// Population mean and std of the targets, std 1 when degenerate.
pub fn standardization(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let std = if ys.len() < 2 || var <= 0.0 { 1.0 } else { var.sqrt() };
    (mean, std)
}

fn gram(xs: &[Point], kp: &KernelParams) -> DMatrix<f64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| k(&xs[i], &xs[j], kp) + if i == j { kp.noise_variance } else { 0.0 })
}

/// Posterior mean and variance in raw units via an explicit inverse.
pub fn dense_posterior(xs: &[Point], ys: &[f64], kp: &KernelParams, q: &Point) -> (f64, f64) {
    let (mean, std) = standardization(ys);
    let y = DVector::from_iterator(ys.len(), ys.iter().map(|v| (v - mean) / std));
    let kinv = gram(xs, kp).try_inverse().expect("invertible");
    let ks = DVector::from_iterator(xs.len(), xs.iter().map(|x| k(x, q, kp)));
    let mu = (ks.transpose() * &kinv * &y)[0];
    let var = k(q, q, kp) - (ks.transpose() * &kinv * &ks)[0];
    (mean + std * mu, var.max(0.0) * std * std)
}

/// Log evidence of the standardized targets via determinant and inverse.
pub fn dense_lml(xs: &[Point], ys: &[f64], kp: &KernelParams) -> f64 {
    let (mean, std) = standardization(ys);
    let y = DVector::from_iterator(ys.len(), ys.iter().map(|v| (v - mean) / std));
    let g = gram(xs, kp);
    let det = g.clone().determinant();
    let kinv = g.try_inverse().expect("invertible");
    let n = ys.len() as f64;
    -0.5 * (y.transpose() * kinv * &y)[0] - 0.5 * det.ln() - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
