//! p-energies, their differentials and the median direction field.

use crate::error::{FinslerError, Result};
use crate::geometry::ChartedManifold;
use crate::measure::{WeightedSampleMeasure, ATOM_COINCIDENCE};
use crate::norms::{Covector, TangentVector, Vector};
use crate::par;

/// Per-atom data seen from `x`: weight, `ρ(x, z)` and `→xz`.
struct AtomView {
    weight: f64,
    rho: f64,
    log: Vector,
}

fn atom_views(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector) -> Result<Vec<AtomView>> {
    if mu.dim() != manifold.dim() {
        return Err(FinslerError::invalid("measure dimension does not match the manifold"));
    }
    if x.len() != manifold.dim() {
        return Err(FinslerError::invalid("point dimension does not match the manifold"));
    }
    let norm = manifold.norm_at(x)?;
    par::try_map(mu.atoms(), |a| {
        if (&a.point - x).amax() <= ATOM_COINCIDENCE {
            return Ok(AtomView { weight: a.weight, rho: 0.0, log: Vector::zeros(x.len()) });
        }
        let log = manifold.log_map(x, &a.point)?.components;
        let rho = norm.norm(&log)?;
        Ok(AtomView { weight: a.weight, rho, log })
    })
}

/// Pairwise sum of equally sized vectors in index order.
fn pairwise_sum_vec(xs: &[Vector], dim: usize) -> Vector {
    match xs.len() {
        0 => Vector::zeros(dim),
        1 => xs[0].clone(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum_vec(a, dim) + pairwise_sum_vec(b, dim)
        }
    }
}

fn check_p(p: f64, min: f64) -> Result<()> {
    if p.is_finite() && p >= min {
        Ok(())
    } else {
        Err(FinslerError::invalid(format!("exponent p must be >= {min} (got {p})")))
    }
}

/// `𝓔_{μ,p}(x) = Σ wᵢ ρ(x, zᵢ)^p`; `p = 1` gives the median functional `𝓕_μ`.
pub fn p_energy(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector, p: f64) -> Result<f64> {
    check_p(p, 1.0)?;
    let views = atom_views(manifold, mu, x)?;
    let terms: Vec<f64> = views.iter().map(|a| a.weight * a.rho.powf(p)).collect();
    Ok(par::pairwise_sum(&terms))
}

/// `d𝓔_{μ,p}(x) = Σ −p wᵢ ρᵢ^{p−1} ℓ(→xzᵢ / ρᵢ)`.
///
/// An atom located at `x` contributes nothing when `p > 1` (its term vanishes
/// continuously); for `p = 1` the functional has a kink there.
pub fn energy_differential(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector, p: f64) -> Result<Covector> {
    check_p(p, 1.0)?;
    let views = atom_views(manifold, mu, x)?;
    if p == 1.0 && views.iter().any(|a| a.rho == 0.0) {
        return Err(FinslerError::NonDifferentiable(
            "an atom sits at x and p = 1; use the median direction and atom criterion instead".into(),
        ));
    }
    let norm = manifold.norm_at(x)?;
    let terms = par::try_map(&views, |a| {
        if a.rho == 0.0 {
            return Ok(Vector::zeros(x.len()));
        }
        Ok(norm.legendre(&(&a.log / a.rho))? * (-p * a.weight * a.rho.powf(p - 1.0)))
    })?;
    Covector::new(x.clone(), pairwise_sum_vec(&terms, x.len()))
}

/// Gradient `ℓ⁻¹(d𝓔_{μ,p})`. Note that `ℓ⁻¹` is not odd, so the steepest-descent
/// direction is [`descent_direction`], not the negative of this vector.
pub fn p_energy_gradient(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector, p: f64) -> Result<TangentVector> {
    let xi = energy_differential(manifold, mu, x, p)?;
    TangentVector::new(x.clone(), manifold.norm_at(x)?.legendre_inverse(&xi.components)?)
}

/// `grad(−𝓔_{μ,p}) = ℓ⁻¹(−d𝓔_{μ,p})`.
pub fn descent_direction(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector, p: f64) -> Result<TangentVector> {
    let xi = energy_differential(manifold, mu, x, p)?;
    TangentVector::new(x.clone(), manifold.norm_at(x)?.legendre_inverse(&(-xi.components))?)
}

/// `d𝓕_{μ_x}(x) = Σ_{zᵢ ≠ x} −wᵢ ℓ(→xzᵢ / ρᵢ)`: the median differential with the atom at `x` removed.
pub fn median_differential(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector) -> Result<Covector> {
    let views = atom_views(manifold, mu, x)?;
    let norm = manifold.norm_at(x)?;
    let terms = par::try_map(&views, |a| {
        if a.rho == 0.0 {
            return Ok(Vector::zeros(x.len()));
        }
        Ok(norm.legendre(&(&a.log / a.rho))? * (-a.weight))
    })?;
    Covector::new(x.clone(), pairwise_sum_vec(&terms, x.len()))
}

/// Median direction `H(x) = ℓ⁻¹(d𝓕_{μ_x})`; the median flow is `ẋ = −H(x)`.
pub fn median_direction(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector) -> Result<TangentVector> {
    let xi = median_differential(manifold, mu, x)?;
    TangentVector::new(x.clone(), manifold.norm_at(x)?.legendre_inverse(&xi.components)?)
}

/// Slack on the atom criterion.
pub const ATOM_CRITERION_TOL: f64 = 1e-12;

/// `(μ({x}), F*(d𝓕_{μ_x}))`.
pub fn atom_criterion(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector) -> Result<(f64, f64)> {
    let xi = median_differential(manifold, mu, x)?;
    let dual = manifold.norm_at(x)?.dual_norm(&xi.components)?;
    Ok((mu.mass_at(x), dual))
}

/// Whether `x` is a local minimum of `𝓕_μ` by the criterion `μ({x}) ≥ F*(d𝓕_{μ_x})`.
///
/// Equality counts as a minimum. At a non-atom this holds only at a critical point.
pub fn atom_local_min_test(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector) -> Result<bool> {
    let (mass, dual) = atom_criterion(manifold, mu, x)?;
    Ok(mass >= dual - ATOM_CRITERION_TOL)
}
