mod common;

use common::*;
use finsler_core::bounds::{
    existence_ball, hessian_lower_bound, hessian_upper_bound, step_constant_ch, step_majorant, step_majorant_measure,
    support_condition, uniqueness_radius, STEP_CONSTANT_SAFETY,
};
use finsler_core::geometry::{ChartedManifold, CurvatureBounds};
use finsler_core::measure::{Atom, WeightedSampleMeasure};
use finsler_core::norms::{Matrix, MinkowskiNorm};
use finsler_core::FinslerError;
use proptest::prelude::*;

proptest! {
    #[test]
    fn radius_shrinks_as_the_constants_grow(
        p in 1.05f64..6.0,
        k in 0.0f64..4.0,
        delta in 0.0f64..4.0,
        c in 1.0f64..3.0,
        bump in 0.01f64..1.0,
    ) {
        let r = uniqueness_radius(p, k, delta, c).unwrap();
        prop_assert!(r > 0.0);
        prop_assert!(uniqueness_radius(p, k + bump, delta, c).unwrap() <= r);
        prop_assert!(uniqueness_radius(p, k, delta + bump, c).unwrap() <= r);
        prop_assert!(uniqueness_radius(p, k, delta, c + bump).unwrap() <= r);
    }

    #[test]
    fn lower_bound_is_positive_inside_the_radius(
        p in 1.05f64..6.0,
        k in 0.01f64..4.0,
        delta in 0.01f64..4.0,
        c in 1.0f64..3.0,
        frac in 0.05f64..0.95,
    ) {
        let r = uniqueness_radius(p, k, delta, c).unwrap();
        prop_assert!(hessian_lower_bound(p, frac * r, k, delta, c).unwrap() > 0.0);
        // The radius is exactly where the bound changes sign.
        let at = hessian_lower_bound(p, r, k, delta, c).unwrap();
        prop_assert!(at.abs() <= 1e-9 * p * r.powf(p - 2.0).max(1.0));
    }

    #[test]
    fn upper_bound_dominates_lower_bound(
        p in 1.05f64..6.0,
        r in 0.01f64..1.5,
        c in 1.0f64..3.0,
        beta in 0.0f64..2.0,
    ) {
        // Same data on both sides: the comparison ranges are ordered.
        let lower = hessian_lower_bound(p, r, beta * beta, 0.0, c).unwrap();
        let upper = hessian_upper_bound(p, r, beta, 0.0, c).unwrap();
        prop_assert!(lower <= upper);
    }

    #[test]
    fn measure_majorant_is_linear_in_the_weights(w in 0.05f64..0.95, x in -1.0f64..2.0) {
        let m = ChartedManifold::flat(MinkowskiNorm::randers(Matrix::identity(1, 1), v(&[0.4])).unwrap());
        let z = [v(&[0.0]), v(&[1.0])];
        let mu = WeightedSampleMeasure::new(vec![
            Atom { point: z[0].clone(), weight: w },
            Atom { point: z[1].clone(), weight: 1.0 - w },
        ]).unwrap();
        let xv = v(&[x]);
        let got = step_majorant_measure(&m, &mu, &xv, 3.0, 0.5, 0.2, 1.3).unwrap();
        let parts: f64 = z.iter().zip([w, 1.0 - w]).map(|(zi, wi)| {
            wi * step_majorant(3.0, m.distance(&xv, zi).unwrap(), 0.5, 0.2, 1.3).unwrap()
        }).sum();
        prop_assert!((got - parts).abs() <= 1e-12 * parts.max(1.0));
    }
}

#[test]
fn step_constant_brackets_a_dense_scan() {
    // 1-D Randers line, p = 3: H_μ(x) = Σ wᵢ 3 ρᵢ D² · 2 with D from the norm.
    let m = ChartedManifold::flat(MinkowskiNorm::randers(Matrix::identity(1, 1), v(&[0.3])).unwrap());
    let mu = WeightedSampleMeasure::from_pairs(&[(vec![-0.5], 0.3), (vec![0.2], 0.3), (vec![1.0], 0.4)]).unwrap();
    let (c, d) = m.norm_ratio_constants(&[v(&[0.0])], 1).unwrap();
    let bounds = CurvatureBounds { c, d, ..CurvatureBounds::default() };
    let center = v(&[0.0]);
    let radius = 0.8;
    let ch = step_constant_ch(&m, &mu, 3.0, &bounds, &center, radius, 5).unwrap();
    // Forward ball of radius 0.8 around 0 is [−0.8/0.7, 0.8/1.3].
    let (lo, hi) = (-radius / 0.7, radius / 1.3);
    let dense = (0..=100_000)
        .map(|j| lo + (hi - lo) * j as f64 / 100_000.0)
        .map(|x| step_majorant_measure(&m, &mu, &v(&[x]), 3.0, 0.0, 0.0, d).unwrap())
        .fold(0.0, f64::max);
    assert!(ch >= dense, "C_H {ch} must majorize the dense maximum {dense}");
    assert!(ch <= STEP_CONSTANT_SAFETY * dense * 1.02);
}

#[test]
fn closed_form_values() {
    // k = 1, δ = 1, C = 1: arctan(1) = π/4.
    assert!((uniqueness_radius(2.0, 1.0, 1.0, 1.0).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    // p = 1.5 binds the linear term: (p − 1)/(C²δ) = 0.5 < π/4.
    assert!((uniqueness_radius(1.5, 1.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(uniqueness_radius(3.0, 0.0, 0.0, 2.0).unwrap(), f64::INFINITY);
    assert_eq!(existence_ball(2.0, 0.5).unwrap(), 3.0);
    assert!(support_condition(0.05, 2.0, 1.0, 1.0, 1.0).unwrap());
    assert!(!support_condition(0.3, 2.0, 1.0, 1.0, 1.0).unwrap());
}

#[test]
fn invalid_ranges_are_rejected() {
    assert!(matches!(hessian_lower_bound(2.0, 4.0, 1.0, 0.0, 1.0), Err(FinslerError::OutOfComparisonRange { .. })));
    assert!(matches!(step_majorant(1.5, 0.0, 0.0, 0.0, 1.0), Err(FinslerError::SingularMajorant { .. })));
    assert!(uniqueness_radius(1.0, 1.0, 1.0, 1.0).is_err());
    assert!(uniqueness_radius(2.0, -1.0, 1.0, 1.0).is_err());
    assert!(uniqueness_radius(2.0, 1.0, 1.0, 0.5).is_err());
}
