#![allow(dead_code)]

use qudit_bloch::linalg::{c, CMat};
use rand::Rng;

/// Hermitian matrix with entries uniform in [−1, 1] + i[−1, 1].
pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize) -> CMat {
    let a = CMat::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * c(0.5, 0.0)
}

pub fn random_pure<R: Rng>(rng: &mut R, d: usize) -> CMat {
    let v: Vec<_> = (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    CMat::from_fn(d, d, |i, j| v[i] * v[j].conj() / c(norm * norm, 0.0))
}

/// Convex mixture of three random pure states.
pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> CMat {
    let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut rho = CMat::zeros(d, d);
    for wi in w {
        rho += random_pure(rng, d) * c(wi / total, 0.0);
    }
    rho
}

/// Five-point central derivative at each interior sample of a uniform series.
pub fn five_point(h: f64, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (2..xs.len() - 2)
        .map(|i| {
            (0..xs[i].len())
                .map(|k| (xs[i - 2][k] - 8.0 * xs[i - 1][k] + 8.0 * xs[i + 1][k] - xs[i + 2][k]) / (12.0 * h))
                .collect()
        })
        .collect()
}
