//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use finsler_core::geometry::{ChartDomain, ChartedManifold};
use finsler_core::measure::{Atom, WeightedSampleMeasure};
use finsler_core::norms::{Matrix, MinkowskiNorm, Vector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// Symmetric positive definite matrix with eigenvalues in roughly `[0.5, 2.5]`.
pub fn spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
    let s = &a * a.transpose();
    s + Matrix::identity(n, n) * 0.5
}

/// Drift with `‖b‖_A = strength`.
pub fn drift(rng: &mut ChaCha8Rng, metric: &Matrix, strength: f64) -> Vector {
    let n = metric.nrows();
    let b = uniform_vector(rng, n, -1.0, 1.0);
    let inv = metric.clone().try_inverse().unwrap();
    let len = b.dot(&(&inv * &b)).sqrt();
    b * (strength / len)
}

pub fn random_randers(rng: &mut ChaCha8Rng, n: usize) -> MinkowskiNorm {
    let a = spd(rng, n);
    let strength = rng.random_range(0.05..0.6);
    let b = drift(rng, &a, strength);
    MinkowskiNorm::randers(a, b).unwrap()
}

pub fn random_euclidean(rng: &mut ChaCha8Rng, n: usize) -> MinkowskiNorm {
    MinkowskiNorm::euclidean(spd(rng, n)).unwrap()
}

/// Probability measure on `points` with random weights in `[0.2, 1)` before normalization.
pub fn random_weights(rng: &mut ChaCha8Rng, points: Vec<Vector>) -> WeightedSampleMeasure {
    let raw: Vec<f64> = points.iter().map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms = points.into_iter().zip(raw).map(|(point, w)| Atom { point, weight: w / total }).collect();
    WeightedSampleMeasure::new(atoms).unwrap()
}

/// Atoms in the box `[-half_width, half_width]ⁿ`.
pub fn random_measure(rng: &mut ChaCha8Rng, n: usize, count: usize, half_width: f64) -> WeightedSampleMeasure {
    let points = (0..count).map(|_| uniform_vector(rng, n, -half_width, half_width)).collect();
    random_weights(rng, points)
}

/// Atoms inside the Euclidean ball of radius `max_radius`.
pub fn random_ball_measure(rng: &mut ChaCha8Rng, n: usize, count: usize, max_radius: f64) -> WeightedSampleMeasure {
    let points = (0..count).map(|_| ball_point(rng, n, max_radius)).collect();
    random_weights(rng, points)
}

pub fn ball_point(rng: &mut ChaCha8Rng, n: usize, max_radius: f64) -> Vector {
    loop {
        let x = uniform_vector(rng, n, -max_radius, max_radius);
        if x.norm() < max_radius {
            return x;
        }
    }
}

/// `F(x; v) = √(vᵀAv) + (b + Bx)·v` on the box `[-1, 1]ⁿ`, with symmetric `B`.
pub fn affine_randers_symmetric(n: usize) -> ChartedManifold {
    let mut grad = Matrix::from_fn(n, n, |i, j| if i == j { 0.15 } else { 0.05 });
    grad[(0, 0)] = -0.1;
    let drift = Vector::from_fn(n, |i, _| 0.1 * (i as f64 + 1.0));
    ChartedManifold::affine_randers(Matrix::identity(n, n), drift, grad, unit_box(n)).unwrap()
}

/// Same family with a skew part in `B`, so geodesics are no longer straight.
pub fn affine_randers_skew(n: usize) -> ChartedManifold {
    let mut grad = Matrix::zeros(n, n);
    grad[(0, 1)] = 0.2;
    grad[(1, 0)] = -0.1;
    ChartedManifold::affine_randers(
        Matrix::identity(n, n),
        Vector::from_fn(n, |i, _| if i == 0 { 0.1 } else { 0.0 }),
        grad,
        unit_box(n),
    )
    .unwrap()
}

pub fn euclidean_poincare_distance(x: &Vector, y: &Vector) -> f64 {
    let num = 2.0 * (x - y).norm_squared();
    let den = (1.0 - x.norm_squared()) * (1.0 - y.norm_squared());
    (1.0 + num / den).acosh()
}

pub fn unit_box(n: usize) -> ChartDomain {
    ChartDomain::Box { lower: Vector::from_element(n, -1.0), upper: Vector::from_element(n, 1.0) }
}
