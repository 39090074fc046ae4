//! Deterministic direction samples on the unit sphere.
//!
//! Dimensions 1–3 use structured point sets (both signs, equally spaced
//! angles, Fibonacci sphere). A nonzero seed rotates the lattice by a
//! seed-derived phase so results stay reproducible per seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::norms::Vector;

/// Environment variable that overrides the sampling seed used by the CLI.
pub const SEED_ENV: &str = "FINSLER_SEED";

/// Seed from `FINSLER_SEED`, or 0 when unset or unparsable.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

fn phase(seed: u64) -> (f64, f64) {
    if seed == 0 {
        return (0.0, 0.5);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.random::<f64>(), rng.random::<f64>())
}

/// `count` unit vectors (Euclidean norm 1) in dimension `dim`.
///
/// In dimension 1 the result is always `[+1, −1]`.
pub fn unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    let count = count.max(1);
    let (rot, jitter) = phase(seed);
    match dim {
        0 => Vec::new(),
        1 => vec![Vector::from_element(1, 1.0), Vector::from_element(1, -1.0)],
        2 => (0..count)
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + rot) / count as f64;
                Vector::from_column_slice(&[theta.cos(), theta.sin()])
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + jitter) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * j as f64 + 2.0 * PI * rot;
                    Vector::from_column_slice(&[r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            (0..count)
                .map(|_| loop {
                    // Box–Muller on pairs, normalized.
                    let v = Vector::from_fn(dim, |_, _| {
                        let u1: f64 = rng.random::<f64>().max(1e-300);
                        let u2: f64 = rng.random();
                        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
                    });
                    let n = v.norm();
                    if n > 1e-12 {
                        break v / n;
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_reproducible() {
        for dim in 1..=4 {
            let a = unit_directions(dim, 64, 7);
            let b = unit_directions(dim, 64, 7);
            assert_eq!(a, b);
            for d in &a {
                assert!((d.norm() - 1.0).abs() < 1e-12);
            }
        }
        assert_ne!(unit_directions(2, 8, 0), unit_directions(2, 8, 3));
    }

    #[test]
    fn default_circle_contains_axes() {
        let d = unit_directions(2, 64, 0);
        assert!((d[0][0] - 1.0).abs() < 1e-15);
        assert!((d[32][0] + 1.0).abs() < 1e-15);
    }
}
