//! Closed-form radii, Hessian bounds and step constants for the mean and median problems.
//!
//! Zero `k`, `δ` and `β` are accepted and evaluated through the analytic limits
//! `x cot x → 1`, `arctan(∞) = π/2` and `x coth x → 1`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::geometry::{ChartedManifold, CurvatureBounds};
use crate::measure::WeightedSampleMeasure;
use crate::norms::Vector;
use crate::par;
use crate::sampling::unit_directions;

/// Safety factor applied to the grid maximum of `H_μ`.
pub const STEP_CONSTANT_SAFETY: f64 = 1.25;
/// Grid points per coordinate axis for the `C_H` estimate.
pub const STEP_CONSTANT_GRID: usize = 9;
/// Unit directions per region point for the convexity margin.
pub const MARGIN_DIRECTIONS: usize = 512;

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(FinslerError::invalid(format!("{name} must be finite and >= 0 (got {x})")))
    }
}

fn check_ratio(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 1.0 {
        Ok(())
    } else {
        Err(FinslerError::invalid(format!("{name} must be finite and >= 1 (got {x})")))
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(FinslerError::invalid(format!("exponent p must be > 1 (got {p})")))
    }
}

/// `x cot x`, continuous at 0.
fn x_cot_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 3.0
    } else {
        x * x.cos() / x.sin()
    }
}

/// `x coth x`, continuous at 0.
fn x_coth_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}

/// `r^{p−2}` with the conventions `0^0 = 1`, `0^{>0} = 0`, `0^{<0} = ∞`.
fn pow_pm2(r: f64, p: f64) -> f64 {
    if r == 0.0 {
        match (p - 2.0).partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 0.0,
            Some(std::cmp::Ordering::Equal) => 1.0,
            _ => f64::INFINITY,
        }
    } else {
        r.powf(p - 2.0)
    }
}

/// Uniqueness radius `R(p,k,δ,C) = min((p−1)/(C²δ), arctan(√k/(C²δ))/√k)`.
///
/// For `p ≥ 2` the first term never binds and the arctan term is returned.
/// `k = δ = 0` gives `+∞`.
pub fn uniqueness_radius(p: f64, k: f64, delta: f64, c: f64) -> Result<f64> {
    check_exponent(p)?;
    check_nonneg("k", k)?;
    check_nonneg("delta", delta)?;
    check_ratio("C", c)?;
    let a = c * c * delta;
    let arctan_term = match (k > 0.0, a > 0.0) {
        (true, true) => (k.sqrt() / a).atan() / k.sqrt(),
        (true, false) => PI / (2.0 * k.sqrt()),
        (false, true) => 1.0 / a,
        (false, false) => f64::INFINITY,
    };
    if p >= 2.0 {
        return Ok(arctan_term);
    }
    let linear_term = if a > 0.0 { (p - 1.0) / a } else { f64::INFINITY };
    Ok(linear_term.min(arctan_term))
}

/// Lower bound `p r^{p−2} (min(p−1, √k r cot(√k r)) C⁻² − δ r)` on `D_p″(0)`.
pub fn hessian_lower_bound(p: f64, r: f64, k: f64, delta: f64, c: f64) -> Result<f64> {
    check_exponent(p)?;
    check_nonneg("k", k)?;
    check_nonneg("delta", delta)?;
    check_ratio("C", c)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(FinslerError::invalid(format!("distance r must be > 0 (got {r})")));
    }
    let s = k.sqrt() * r;
    if s >= PI {
        return Err(FinslerError::OutOfComparisonRange { value: s });
    }
    Ok(p * pow_pm2(r, p) * ((p - 1.0).min(x_cot_x(s)) / (c * c) - delta * r))
}

/// Upper bound `p r^{p−2} (D² max(p−1, β r coth(β r)) + δ′ r)` on `D_p″(0)`.
pub fn hessian_upper_bound(p: f64, r: f64, beta: f64, delta_prime: f64, d: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(FinslerError::invalid(format!("distance r must be > 0 (got {r})")));
    }
    step_majorant(p, r, beta, delta_prime, d)
}

/// Step majorant `H(r)`; the same expression as [`hessian_upper_bound`], also defined at `r = 0`
/// when `p ≥ 2`.
pub fn step_majorant(p: f64, r: f64, beta: f64, delta_prime: f64, d: f64) -> Result<f64> {
    check_exponent(p)?;
    check_nonneg("beta", beta)?;
    check_nonneg("delta_prime", delta_prime)?;
    check_ratio("D", d)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(FinslerError::invalid(format!("distance r must be >= 0 (got {r})")));
    }
    if r == 0.0 && p < 2.0 {
        return Err(FinslerError::SingularMajorant { p });
    }
    Ok(p * pow_pm2(r, p) * (d * d * (p - 1.0).max(x_coth_x(beta * r)) + delta_prime * r))
}

/// `H_μ(x) = Σ wᵢ H(ρ(x, zᵢ))`.
pub fn step_majorant_measure(
    manifold: &ChartedManifold,
    mu: &WeightedSampleMeasure,
    x: &Vector,
    p: f64,
    beta: f64,
    delta_prime: f64,
    d: f64,
) -> Result<f64> {
    let terms = par::try_map(mu.atoms(), |a| {
        let r = manifold.distance(x, &a.point)?;
        Ok(a.weight * step_majorant(p, r, beta, delta_prime, d)?)
    })?;
    Ok(par::pairwise_sum(&terms))
}

/// Coordinate grid covering the closed forward ball `B̄(center, radius)`, filtered to the ball.
///
/// The coordinate box is spanned by shooting unit-speed geodesics of length
/// `radius` in sampled directions; in dimension ≥ 2 it is widened by 5% per side.
pub fn ball_grid(manifold: &ChartedManifold, center: &Vector, radius: f64, per_axis: usize, seed: u64) -> Result<Vec<Vector>> {
    manifold.contains(center).then_some(()).ok_or_else(|| FinslerError::invalid("grid center is outside the chart"))?;
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(FinslerError::invalid(format!("region radius must be finite and >= 0 (got {radius})")));
    }
    let n = manifold.dim();
    if radius == 0.0 || per_axis < 2 {
        return Ok(vec![center.clone()]);
    }
    let count = match n {
        1 => 2,
        2 => 64,
        3 => 256,
        _ => 64 * n,
    };
    let norm = manifold.norm_at(center)?;
    let dirs = unit_directions(n, count, seed);
    let ends = par::try_map(&dirs, |d| {
        let u = d / norm.norm(d)?;
        manifold.exp_point(center, &(u * radius))
    })?;
    let mut lo = center.clone();
    let mut hi = center.clone();
    for e in &ends {
        lo = lo.inf(e);
        hi = hi.sup(e);
    }
    if n >= 2 {
        let pad = (&hi - &lo) * 0.05;
        lo -= &pad;
        hi += &pad;
    }
    let total = per_axis.pow(n as u32);
    let mut candidates = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = flat;
        let mut y = Vector::zeros(n);
        for i in 0..n {
            let j = idx % per_axis;
            idx /= per_axis;
            y[i] = lo[i] + (hi[i] - lo[i]) * j as f64 / (per_axis - 1) as f64;
        }
        if manifold.contains(&y) {
            candidates.push(y);
        }
    }
    let keep = par::try_map(&candidates, |y| Ok(manifold.distance(center, y)? <= radius * (1.0 + 1e-12)))?;
    let mut grid = vec![center.clone()];
    grid.extend(candidates.into_iter().zip(keep).filter_map(|(y, k)| k.then_some(y)));
    Ok(grid)
}

/// `C_H`: 1.25 times the maximum of `H_μ` over a 9-per-axis grid of `B̄(center, radius)`.
pub fn step_constant_ch(
    manifold: &ChartedManifold,
    mu: &WeightedSampleMeasure,
    p: f64,
    bounds: &CurvatureBounds,
    center: &Vector,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    bounds.validate()?;
    check_exponent(p)?;
    let grid = ball_grid(manifold, center, radius, STEP_CONSTANT_GRID, seed)?;
    let values = par::try_map(&grid, |y| {
        step_majorant_measure(manifold, mu, y, p, bounds.beta, bounds.delta_prime, bounds.d)
    })?;
    Ok(STEP_CONSTANT_SAFETY * values.into_iter().fold(0.0, f64::max))
}

/// Radius `C(1+C)R` of the ball known to contain a global minimizer.
pub fn existence_ball(c: f64, r: f64) -> Result<f64> {
    check_ratio("C", c)?;
    if !(r > 0.0) {
        return Err(FinslerError::invalid(format!("support radius must be > 0 (got {r})")));
    }
    Ok(c * (1.0 + c) * r)
}

/// Support-radius condition `R ≤ R(p,k,δ,C) / (C(C+1)²)`.
pub fn support_condition(r: f64, p: f64, k: f64, delta: f64, c: f64) -> Result<bool> {
    let limit = uniqueness_radius(p, k, delta, c)? / (c * (c + 1.0) * (c + 1.0));
    Ok(r <= limit)
}

/// `η − δ`, where `η` is the minimum over region points and sampled unit vectors `v` of
/// `Σ wᵢ √k cot(√k ρ(x, zᵢ)) g_{→xzᵢ}(v^N, v^N)`, with `v^N` the part of `v` that is
/// `g_{→xzᵢ}`-orthogonal to `→xzᵢ`. Atoms located at a region point are skipped there.
pub fn median_convexity_margin(
    manifold: &ChartedManifold,
    mu: &WeightedSampleMeasure,
    region: &[Vector],
    k: f64,
    delta: f64,
    seed: u64,
) -> Result<f64> {
    check_nonneg("k", k)?;
    check_nonneg("delta", delta)?;
    if region.is_empty() {
        return Err(FinslerError::invalid("convexity margin needs a nonempty region"));
    }
    let dirs = unit_directions(manifold.dim(), MARGIN_DIRECTIONS, seed);
    let per_point = par::try_map(region, |x| {
        let norm = manifold.norm_at(x)?;
        let units: Vec<Vector> = dirs.iter().map(|d| Ok(d / norm.norm(d)?)).collect::<Result<_>>()?;
        let mut sums = vec![0.0; units.len()];
        for atom in mu.atoms() {
            let t = manifold.log_map(x, &atom.point)?.components;
            let rho = norm.norm(&t)?;
            if rho == 0.0 {
                continue;
            }
            let s = k.sqrt() * rho;
            if s >= PI {
                return Err(FinslerError::OutOfComparisonRange { value: s });
            }
            // √k cot(√k ρ) = x cot x / ρ
            let factor = x_cot_x(s) / rho;
            let g = norm.fundamental_tensor_matrix(&t)?;
            let gt = &g * &t;
            for (acc, v) in sums.iter_mut().zip(&units) {
                let vn = v - &t * (gt.dot(v) / (rho * rho));
                *acc += atom.weight * factor * vn.dot(&(&g * &vn));
            }
        }
        Ok(sums.into_iter().fold(f64::INFINITY, f64::min))
    })?;
    let eta = per_point.into_iter().fold(f64::INFINITY, f64::min);
    Ok(eta - delta)
}

/// Data of a mean problem whose measure is supported in the forward ball `B(x₀, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanProblemBounds {
    pub p: f64,
    pub bounds: CurvatureBounds,
    /// Support radius `R`.
    pub support_radius: f64,
    pub x0: Vector,
}

/// Injectivity-radius requirements, each compared against the supplied lower bound `inj`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InjectivityChecks {
    /// `inj > R(p,k,δ,C)` on the existence ball.
    pub exceeds_uniqueness_radius: bool,
    /// `inj > (C²+C+1)R`.
    pub exceeds_scaled_support: bool,
    /// `inj > C²+C+1`, stated without a factor of `R` for the discrete algorithm.
    pub exceeds_unscaled_constant: bool,
}

impl MeanProblemBounds {
    pub fn new(p: f64, bounds: CurvatureBounds, support_radius: f64, x0: Vector) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(FinslerError::invalid(format!("exponent p must be >= 1 (got {p})")));
        }
        if !(support_radius > 0.0) || !support_radius.is_finite() {
            return Err(FinslerError::invalid(format!("support radius must be finite and > 0 (got {support_radius})")));
        }
        bounds.validate()?;
        Ok(Self { p, bounds, support_radius, x0 })
    }

    /// Smallest forward radius around `x0` containing every atom, floored at a tiny positive value.
    pub fn support_radius_of(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x0: &Vector) -> Result<f64> {
        let ds = par::try_map(mu.atoms(), |a| manifold.distance(x0, &a.point))?;
        Ok(ds.into_iter().fold(0.0, f64::max).max(f64::MIN_POSITIVE))
    }

    pub fn uniqueness_radius(&self) -> Result<f64> {
        let b = &self.bounds;
        // p = 1 is the median case; the radius formula needs p > 1, so report its p → 1 limit.
        if self.p == 1.0 {
            return uniqueness_radius(1.0 + f64::EPSILON, b.k, b.delta, b.c);
        }
        uniqueness_radius(self.p, b.k, b.delta, b.c)
    }

    pub fn existence_radius(&self) -> Result<f64> {
        existence_ball(self.bounds.c, self.support_radius)
    }

    pub fn support_condition(&self) -> Result<bool> {
        let c = self.bounds.c;
        Ok(self.support_radius <= self.uniqueness_radius()? / (c * (c + 1.0) * (c + 1.0)))
    }

    pub fn injectivity(&self) -> Result<InjectivityChecks> {
        let c = self.bounds.c;
        let inj = self.bounds.inj;
        let k = c * c + c + 1.0;
        // An infinite injectivity radius satisfies every condition, including an infinite radius.
        Ok(InjectivityChecks {
            exceeds_uniqueness_radius: inj == f64::INFINITY || inj > self.uniqueness_radius()?,
            exceeds_scaled_support: inj > k * self.support_radius,
            exceeds_unscaled_constant: inj > k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{Matrix, MinkowskiNorm};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn riemannian_limit_of_the_radius() {
        for k in [0.25, 1.0, 4.0] {
            for p in [2.0, 3.0, 7.5] {
                let r = uniqueness_radius(p, k, 0.0, 1.0).unwrap();
                assert!((r - PI / (2.0 * k.sqrt())).abs() < 1e-12);
            }
            let tiny = uniqueness_radius(2.0, k, 1e-14, 1.0).unwrap();
            assert!((tiny - PI / (2.0 * k.sqrt())).abs() < 1e-9);
        }
        assert_eq!(uniqueness_radius(2.0, 0.0, 0.0, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn radius_direct_values() {
        assert_eq!(uniqueness_radius(1.5, 1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(uniqueness_radius(2.0, 1.0, 1.0, 1.0).unwrap(), 1.0f64.atan());
        assert_eq!(uniqueness_radius(2.0, 1.0, 0.3, 1.7).unwrap(), uniqueness_radius(9.0, 1.0, 0.3, 1.7).unwrap());
        assert!(uniqueness_radius(2.0, -1.0, 0.3, 1.0).is_err());
        assert!(uniqueness_radius(2.0, 1.0, -0.3, 1.0).is_err());
        assert!(uniqueness_radius(1.0, 1.0, 0.3, 1.0).is_err());
    }

    #[test]
    fn lower_bound_values() {
        assert!((hessian_lower_bound(2.0, 1.0, 0.0, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        // 2·(0.5 cot 0.5 − 0.05), cot evaluated independently as cos/sin.
        let expected = 2.0 * (0.5 * 0.5f64.cos() / 0.5f64.sin() - 0.05);
        let got = hessian_lower_bound(2.0, 0.5, 1.0, 0.1, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 1.730_487_721_712_452).abs() < 1e-12);
        assert!(matches!(hessian_lower_bound(2.0, 4.0, 1.0, 0.0, 1.0), Err(FinslerError::OutOfComparisonRange { .. })));
    }

    #[test]
    fn lower_bound_small_r_asymptotics() {
        for c in [1.0, 1.5, 3.0] {
            let r = 1e-4;
            let got = hessian_lower_bound(2.0, r, 1.0, 0.5, c).unwrap();
            let asym = 2.0 * 1.0 / (c * c);
            assert!((got / asym - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn upper_bound_values() {
        assert!((hessian_upper_bound(2.0, 1.0, 0.0, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        let expected = 2.0 * (1.0 / 1.0f64.tanh() + 0.1);
        let got = hessian_upper_bound(2.0, 1.0, 1.0, 0.1, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 2.8260705709986626).abs() < 1e-12);
        assert!(hessian_upper_bound(2.0, 0.0, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn majorant_at_zero_distance() {
        assert_eq!(step_majorant(2.0, 0.0, 1.0, 0.5, 2.0).unwrap(), 2.0 * 4.0);
        assert_eq!(step_majorant(3.0, 0.0, 1.0, 0.5, 2.0).unwrap(), 0.0);
        assert_eq!(step_majorant(1.5, 0.0, 1.0, 0.5, 2.0), Err(FinslerError::SingularMajorant { p: 1.5 }));
    }

    #[test]
    fn two_atom_majorant() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(1));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![0.5], 0.3), (vec![-1.2], 0.7)]).unwrap();
        let got = step_majorant_measure(&m, &mu, &v(&[0.0]), 2.0, 1.0, 0.0, 1.0).unwrap();
        let oracle = 0.3 * 2.0 * (0.5 / 0.5f64.tanh()) + 0.7 * 2.0 * (1.2 / 1.2f64.tanh());
        assert!((got - oracle).abs() < 1e-14);
        assert!((got - 2.664_409_098_364_745).abs() < 1e-12);
    }

    #[test]
    fn flat_euclidean_step_constant() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(2));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![0.0, 0.0], 0.5), (vec![1.0, 3.0], 0.5)]).unwrap();
        let ch = step_constant_ch(&m, &mu, 2.0, &CurvatureBounds::default(), &v(&[0.0, 0.0]), 2.0, 0).unwrap();
        assert!((ch - 2.5).abs() < 1e-12);
    }

    #[test]
    fn existence_and_support_condition() {
        assert_eq!(existence_ball(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(existence_ball(2.0, 0.5).unwrap(), 3.0);
        assert!(existence_ball(0.5, 1.0).is_err());
        // R(2,1,1,1) = π/4; limit π/4 / 4.
        assert!(support_condition(0.19, 2.0, 1.0, 1.0, 1.0).unwrap());
        assert!(!support_condition(0.2, 2.0, 1.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn margin_in_one_dimension_is_minus_delta() {
        let m = ChartedManifold::flat(MinkowskiNorm::randers(Matrix::identity(1, 1), v(&[0.5])).unwrap());
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![-1.0], 0.5), (vec![2.0], 0.5)]).unwrap();
        let margin = median_convexity_margin(&m, &mu, &[v(&[0.0]), v(&[0.5])], 0.0, 0.3, 0).unwrap();
        assert!((margin + 0.3).abs() < 1e-15);
    }

    #[test]
    fn flat_margin_for_symmetric_atoms() {
        // Atoms at (±1, 0), x = 0: the integrand is 1/ρ · |v_y|², minimized at v = (±1, 0) with value 0
        // and maximized at v = (0, ±1) with value 1.
        let m = ChartedManifold::flat(MinkowskiNorm::identity(2));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![1.0, 0.0], 0.5), (vec![-1.0, 0.0], 0.5)]).unwrap();
        let eta = median_convexity_margin(&m, &mu, &[v(&[0.0, 0.0])], 0.0, 0.0, 0).unwrap();
        assert!(eta.abs() < 1e-12 && eta <= 1.0);
        let m1 = median_convexity_margin(&m, &mu, &[v(&[0.0, 0.5])], 0.0, 0.1, 0).unwrap();
        let m2 = median_convexity_margin(&m, &mu, &[v(&[0.0, 0.5])], 0.0, 0.05, 0).unwrap();
        assert!(m1 > -0.1 && m2 > m1);
    }

    #[test]
    fn injectivity_checks() {
        let b = CurvatureBounds { k: 1.0, delta: 1.0, inj: 3.5, ..CurvatureBounds::default() };
        let problem = MeanProblemBounds::new(2.0, b, 0.1, v(&[0.0, 0.0])).unwrap();
        let checks = problem.injectivity().unwrap();
        assert!(checks.exceeds_uniqueness_radius && checks.exceeds_scaled_support && checks.exceeds_unscaled_constant);
        assert!(MeanProblemBounds::new(2.0, b, 0.0, v(&[0.0])).is_err());
    }
}
