//! Tangent curvature, norm-ratio constants and the second-variation diagnostic.

use serde::Serialize;

use super::{ChartedManifold, CurvatureBounds};
use crate::bounds::{hessian_lower_bound, hessian_upper_bound};
use crate::error::{FinslerError, Result};
use crate::norms::{Matrix, Vector};
use crate::sampling::unit_directions;

/// Directions sampled per point for the norm-ratio constants (all pairs are used).
const RATIO_DIRECTIONS: usize = 64;
/// Step along the geodesic for the second difference of `D_p`.
pub const SECOND_VARIATION_STEP: f64 = 1e-3;

fn nonzero(v: &Vector) -> Result<()> {
    if v.iter().all(|&c| c == 0.0) {
        Err(FinslerError::DegenerateReferenceVector)
    } else {
        Ok(())
    }
}

impl ChartedManifold {
    /// Tangent curvature `𝒯_V(W)` using the extension of `W` with constant components.
    pub fn tangent_curvature(&self, x: &Vector, v: &Vector, w: &Vector) -> Result<f64> {
        nonzero(v)?;
        nonzero(w)?;
        let gamma_w = self.chern_christoffel(x, w)?;
        let gamma_v = self.chern_christoffel(x, v)?;
        let diff = gamma_w.contract(w, w) - gamma_v.contract(w, w);
        let g = self.metric_tensor(x, v)?;
        Ok(diff.dot(&(g * v)))
    }

    /// Tangent curvature with an explicit vector field `extension` satisfying `extension(x) = W`.
    ///
    /// The covariant derivatives `∇_W^U W̃` are formed in full, including the
    /// directional derivative of the field, before subtracting.
    pub fn tangent_curvature_with_extension<E>(&self, x: &Vector, v: &Vector, extension: E) -> Result<f64>
    where
        E: Fn(&Vector) -> Vector,
    {
        let w = extension(x);
        nonzero(v)?;
        nonzero(&w)?;
        let h = 1e-5;
        let dw = (extension(&(x + &w * h)) - extension(&(x - &w * h))) / (2.0 * h);
        let nabla_w = &dw + self.chern_christoffel(x, &w)?.contract(&w, &w);
        let nabla_v = &dw + self.chern_christoffel(x, v)?.contract(&w, &w);
        let g = self.metric_tensor(x, v)?;
        Ok((nabla_w - nabla_v).dot(&(g * v)))
    }

    /// Upper estimates of `𝒞` and `𝒟` over `region`, both at least 1.
    ///
    /// Each point is scanned over all pairs of sampled unit directions and the
    /// best pair is then polished by a compass search.
    pub fn norm_ratio_constants(&self, region: &[Vector], seed: u64) -> Result<(f64, f64)> {
        if region.is_empty() {
            return Err(FinslerError::invalid("norm_ratio_constants needs a nonempty region"));
        }
        let dirs = unit_directions(self.dim(), RATIO_DIRECTIONS, seed);
        let mut c_max = 1.0f64;
        let mut d_max = 1.0f64;
        for x in region {
            let norm = self.norm_at(x)?;
            let gs: Vec<Matrix> = dirs.iter().map(|w| norm.fundamental_tensor_matrix(w)).collect::<Result<_>>()?;
            // ratio(v, w) = g_v(v,v) / g_w(v,v) = F(v)² / g_w(v,v)
            let ratio = |v: &Vector, g: &Matrix| {
                let f = norm.value(v);
                f * f / v.dot(&(g * v))
            };
            let mut best_c = (1.0, 0, 0);
            let mut best_d = (1.0, 0, 0);
            for (i, v) in dirs.iter().enumerate() {
                for (j, g) in gs.iter().enumerate() {
                    let r = ratio(v, g);
                    if r > best_c.0 {
                        best_c = (r, i, j);
                    }
                    if 1.0 / r > best_d.0 {
                        best_d = (1.0 / r, i, j);
                    }
                }
            }
            let objective_c = |v: &Vector, w: &Vector| -> f64 {
                norm.fundamental_tensor_matrix(w).map(|g| ratio(v, &g)).unwrap_or(f64::NEG_INFINITY)
            };
            let objective_d = |v: &Vector, w: &Vector| -> f64 {
                norm.fundamental_tensor_matrix(w).map(|g| 1.0 / ratio(v, &g)).unwrap_or(f64::NEG_INFINITY)
            };
            let c = if self.dim() > 1 && best_c.0 > 1.0 {
                compass_maximize(&dirs[best_c.1], &dirs[best_c.2], best_c.0, objective_c)
            } else {
                best_c.0
            };
            let d = if self.dim() > 1 && best_d.0 > 1.0 {
                compass_maximize(&dirs[best_d.1], &dirs[best_d.2], best_d.0, objective_d)
            } else {
                best_d.0
            };
            c_max = c_max.max(c.sqrt());
            d_max = d_max.max(d.sqrt());
        }
        Ok((c_max, d_max))
    }

    /// Second difference of `s ↦ ρ^p(γ(s), z)` along the unit-speed geodesic
    /// leaving `x` in `direction`, bracketed by the analytic Hessian bounds.
    pub fn second_variation_diag(
        &self,
        x: &Vector,
        z: &Vector,
        direction: &Vector,
        p: f64,
        bounds: &CurvatureBounds,
    ) -> Result<SecondVariationReport> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(FinslerError::invalid("second variation requires p > 1"));
        }
        bounds.validate()?;
        nonzero(direction)?;
        let speed = self.norm_at(x)?.norm(direction)?;
        let u = direction / speed;
        let r = self.distance(x, z)?;
        if r == 0.0 {
            return Err(FinslerError::invalid("second variation needs x != z"));
        }
        let h = SECOND_VARIATION_STEP;
        let dp = |s: f64| -> Result<f64> {
            let point = if s == 0.0 { x.clone() } else { self.geodesic_flow(x, &u, s, 16)?.endpoint() };
            Ok(self.distance(&point, z)?.powf(p))
        };
        let numeric = (dp(h)? - 2.0 * dp(0.0)? + dp(-h)?) / (h * h);
        let lower = hessian_lower_bound(p, r, bounds.k, bounds.delta, bounds.c)?;
        let upper = hessian_upper_bound(p, r, bounds.beta, bounds.delta_prime, bounds.d)?;
        let tolerance = 0.05 * (upper - lower).abs();
        let within = numeric >= lower - tolerance && numeric <= upper + tolerance;
        Ok(SecondVariationReport { numeric, lower, upper, distance: r, tolerance, within })
    }
}

/// Result of [`ChartedManifold::second_variation_diag`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondVariationReport {
    /// Numeric `D_p″(0)`.
    pub numeric: f64,
    pub lower: f64,
    pub upper: f64,
    /// `ρ(x, z)`.
    pub distance: f64,
    /// Slack used for `within`: 5% of the bound spread.
    pub tolerance: f64,
    pub within: bool,
}

/// Maximizes `f(v, w)` by compass search on the concatenated components.
fn compass_maximize<F>(v0: &Vector, w0: &Vector, f0: f64, f: F) -> f64
where
    F: Fn(&Vector, &Vector) -> f64,
{
    let n = v0.len();
    let mut v = v0.clone();
    let mut w = w0.clone();
    let mut best = f0;
    let mut step = 0.05;
    while step > 1e-10 {
        let mut improved = false;
        for idx in 0..2 * n {
            for sign in [1.0, -1.0] {
                let (mut vc, mut wc) = (v.clone(), w.clone());
                if idx < n {
                    vc[idx] += sign * step;
                } else {
                    wc[idx - n] += sign * step;
                }
                let (nv, nw) = (vc.norm(), wc.norm());
                if nv == 0.0 || nw == 0.0 {
                    continue;
                }
                vc /= nv;
                wc /= nw;
                let val = f(&vc, &wc);
                if val > best {
                    best = val;
                    v = vc;
                    w = wc;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::MinkowskiNorm;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn euclidean_ratio_constants_are_one() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(3));
        let (c, d) = m.norm_ratio_constants(&[v(&[0.0, 0.0, 0.0])], 0).unwrap();
        assert!((c - 1.0).abs() < 1e-12 && (d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_randers_ratio_constants() {
        // Exhaustive sweep: g_+ = 2.25, g_- = 0.25, so both constants are √9 = 3.
        let m = ChartedManifold::flat(MinkowskiNorm::randers(Matrix::identity(1, 1), v(&[0.5])).unwrap());
        let (c, d) = m.norm_ratio_constants(&[v(&[0.0])], 0).unwrap();
        let mut oracle_c = 1.0f64;
        let mut oracle_d = 1.0f64;
        let g = |s: f64| (1.0 + 0.5 * s) * (1.0 + 0.5 * s);
        for sv in [1.0, -1.0] {
            for sw in [1.0, -1.0] {
                oracle_c = oracle_c.max((g(sv) / g(sw)).sqrt());
                oracle_d = oracle_d.max((g(sw) / g(sv)).sqrt());
            }
        }
        assert!((c - oracle_c).abs() < 1e-12 && (oracle_c - 3.0).abs() < 1e-12);
        assert!((d - oracle_d).abs() < 1e-12);
    }

    #[test]
    fn zero_vectors_are_rejected_by_tangent_curvature() {
        let m = ChartedManifold::poincare_disk();
        let x = v(&[0.1, 0.1]);
        assert_eq!(
            m.tangent_curvature(&x, &v(&[0.0, 0.0]), &v(&[1.0, 0.0])),
            Err(FinslerError::DegenerateReferenceVector)
        );
    }

    #[test]
    fn riemannian_tangent_curvature_vanishes() {
        let m = ChartedManifold::poincare_disk();
        let t = m.tangent_curvature(&v(&[0.3, -0.1]), &v(&[1.0, 0.2]), &v(&[-0.4, 0.9])).unwrap();
        assert!(t.abs() < 1e-8);
    }
}
