mod common;

use common::v;
use finsler_core::norms::{Matrix, MinkowskiNorm, Vector};
use finsler_core::FinslerError;
use proptest::prelude::*;

/// Randers norm on ℝⁿ with metric `diag(a) + 0.2·(offdiag)` and drift scaled to `strength`.
fn randers_from(diag: &[f64], off: f64, dir: &[f64], strength: f64) -> MinkowskiNorm {
    let n = diag.len();
    let a = Matrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { off });
    let inv = a.clone().try_inverse().unwrap();
    let b = Vector::from_column_slice(dir);
    let len = b.dot(&(&inv * &b)).sqrt();
    MinkowskiNorm::randers(a, b * (strength / len)).unwrap()
}

fn norm_strategy() -> impl Strategy<Value = MinkowskiNorm> {
    (1usize..=3)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.5f64..2.0, n),
                -0.2f64..0.2,
                prop::collection::vec(prop_oneof![-1.0f64..-0.1, 0.1f64..1.0], n),
                0.0f64..0.9,
            )
        })
        .prop_map(|(diag, off, dir, s)| randers_from(&diag, off, &dir, s))
}

fn with_vector() -> impl Strategy<Value = (MinkowskiNorm, Vector)> {
    norm_strategy().prop_flat_map(|norm| {
        let n = norm.dim();
        (Just(norm), prop::collection::vec(-3.0f64..3.0, n).prop_filter("nonzero", |x| x.iter().any(|c| c.abs() > 1e-3)))
            .prop_map(|(norm, x)| (norm, Vector::from_vec(x)))
    })
}

proptest! {
    #[test]
    fn legendre_roundtrip_and_duality((norm, x) in with_vector()) {
        let f = norm.norm(&x).unwrap();
        let xi = norm.legendre(&x).unwrap();
        prop_assert!((norm.legendre_inverse(&xi).unwrap() - &x).amax() <= 1e-9 * x.amax().max(1.0));
        prop_assert!((norm.dual_norm(&xi).unwrap() - f).abs() <= 1e-9 * f.max(1.0));
        prop_assert!((xi.dot(&x) - f * f).abs() <= 1e-9 * (f * f).max(1.0));
    }

    #[test]
    fn norm_is_positively_homogeneous((norm, x) in with_vector(), s in 0.01f64..50.0) {
        let f = norm.norm(&x).unwrap();
        prop_assert!(f > 0.0);
        prop_assert!((norm.norm(&(&x * s)).unwrap() - s * f).abs() <= 1e-12 * s * f.max(1.0));
        let l = norm.legendre(&x).unwrap();
        prop_assert!((norm.legendre(&(&x * s)).unwrap() - l * s).amax() <= 1e-10 * s * f.max(1.0));
    }

    #[test]
    fn fundamental_tensor_reproduces_the_norm((norm, x) in with_vector()) {
        let f = norm.norm(&x).unwrap();
        let g = norm.fundamental_tensor(&x, &x, &x).unwrap();
        prop_assert!((g - f * f).abs() <= 1e-10 * (f * f).max(1.0));
        let gm = norm.fundamental_tensor_matrix(&x).unwrap();
        prop_assert!((&gm - gm.transpose()).amax() <= 1e-12 * gm.amax());
        prop_assert!(gm.cholesky().is_some(), "g_V must be positive definite");
    }

    #[test]
    fn reverse_norm_flips_the_argument((norm, x) in with_vector()) {
        let rev = norm.reversed();
        prop_assert!((rev.norm(&x).unwrap() - norm.norm(&(-&x)).unwrap()).abs() <= 1e-12);
        // F⃖* (ξ) = F*(−ξ).
        let xi = norm.legendre(&x).unwrap();
        prop_assert!((rev.dual_norm(&xi).unwrap() - norm.dual_norm(&(-&xi)).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn cartan_slots_vanish_along_the_reference((norm, x) in with_vector()) {
        let n = norm.dim();
        let y = Vector::from_fn(n, |i, _| 0.3 + i as f64);
        let z = Vector::from_fn(n, |i, _| 1.0 - 0.7 * i as f64);
        prop_assert!(norm.cartan_term(&x, &x, &y, &z).unwrap().abs() <= 1e-8);
        prop_assert!(norm.cartan_term(&x, &y, &z, &x).unwrap().abs() <= 1e-8);
    }
}

#[test]
fn one_dimensional_randers_dual_norm() {
    // F*(ξ) = max(ξ/(1+b), −ξ/(1−b)) on ℝ with b = 0.5.
    let norm = MinkowskiNorm::randers(Matrix::identity(1, 1), v(&[0.5])).unwrap();
    assert!((norm.dual_norm(&v(&[1.0])).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((norm.dual_norm(&v(&[-1.0])).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn euclidean_cartan_tensor_is_zero() {
    let norm = MinkowskiNorm::euclidean(Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
    let c = norm.cartan_tensor(&v(&[0.4, -1.2])).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                assert!(c.get(i, j, k).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn rejects_bad_input() {
    assert!(MinkowskiNorm::randers(Matrix::identity(2, 2), v(&[0.8, 0.8])).is_err());
    assert!(MinkowskiNorm::euclidean(Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    let norm = MinkowskiNorm::identity(2);
    assert!(matches!(norm.fundamental_tensor_matrix(&v(&[0.0, 0.0])), Err(FinslerError::DegenerateReferenceVector)));
    assert_eq!(norm.legendre(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
    assert!(norm.norm(&v(&[1.0])).is_err());
}
