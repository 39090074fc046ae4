use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::norms::{matrix_from_rows, rows, Matrix, MinkowskiNorm, NormSpec, Vector};

/// Coordinate step for `∂g/∂x` when no closed form is available.
pub const METRIC_DERIVATIVE_STEP: f64 = 1e-4;

/// Region of coordinates where the chart is valid.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartDomain {
    Whole,
    /// Closed coordinate box.
    Box { lower: Vector, upper: Vector },
    /// Open Euclidean ball in coordinates.
    Ball { center: Vector, radius: f64 },
}

impl ChartDomain {
    pub fn contains(&self, x: &Vector) -> bool {
        if x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match self {
            ChartDomain::Whole => true,
            ChartDomain::Box { lower, upper } => {
                x.iter().zip(lower.iter().zip(upper.iter())).all(|(c, (lo, hi))| *c >= *lo && *c <= *hi)
            }
            ChartDomain::Ball { center, radius } => (x - center).norm() < *radius,
        }
    }
}

type NormFieldFn = dyn Fn(&Vector) -> Result<MinkowskiNorm> + Send + Sync;
type MetricFieldFn = dyn Fn(&Vector) -> Matrix + Send + Sync;

#[derive(Clone)]
enum NormField {
    Constant(MinkowskiNorm),
    /// Conformal metric `4|dx|²/(1 − |x|²)²` on the unit ball.
    PoincareBall,
    /// Randers norm with constant `a` and drift `b(x) = b₀ + Bx`.
    AffineRanders { metric: Matrix, drift: Vector, gradient: Matrix },
    Riemannian(Arc<MetricFieldFn>),
    Custom(Arc<NormFieldFn>),
}

/// A single coordinate chart carrying a point-dependent Minkowski norm.
#[derive(Clone)]
pub struct ChartedManifold {
    dim: usize,
    field: NormField,
    domain: ChartDomain,
}

impl fmt::Debug for ChartedManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.field {
            NormField::Constant(n) => format!("Flat({n:?})"),
            NormField::PoincareBall => "PoincareBall".to_string(),
            NormField::AffineRanders { .. } => "AffineRanders".to_string(),
            NormField::Riemannian(_) => "RiemannianField".to_string(),
            NormField::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("ChartedManifold")
            .field("dim", &self.dim)
            .field("field", &kind)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ChartedManifold {
    /// `ℝⁿ` with the same norm at every point.
    pub fn flat(norm: MinkowskiNorm) -> Self {
        Self { dim: norm.dim(), field: NormField::Constant(norm), domain: ChartDomain::Whole }
    }

    /// Poincaré disk model of the hyperbolic plane (curvature −1).
    pub fn poincare_disk() -> Self {
        Self::poincare_ball(2)
    }

    pub fn poincare_ball(dim: usize) -> Self {
        Self {
            dim,
            field: NormField::PoincareBall,
            domain: ChartDomain::Ball { center: Vector::zeros(dim), radius: 1.0 },
        }
    }

    /// Randers norms `√(vᵀAv) + b(x)·v` with `b(x) = drift + gradient · x`.
    ///
    /// A nonzero gradient requires a box domain on which `‖b(x)‖_A < 1`.
    pub fn affine_randers(metric: Matrix, drift: Vector, gradient: Matrix, domain: ChartDomain) -> Result<Self> {
        let dim = metric.nrows();
        if gradient.nrows() != dim || gradient.ncols() != dim || drift.len() != dim {
            return Err(FinslerError::invalid("drift and drift gradient must match the metric dimension"));
        }
        // Validates the metric and the drift at the origin of the field.
        MinkowskiNorm::euclidean(metric.clone())?;
        if gradient.iter().all(|&g| g == 0.0) {
            MinkowskiNorm::randers(metric.clone(), drift.clone())?;
        } else {
            match &domain {
                ChartDomain::Box { lower, upper } => {
                    // ‖b(x)‖_A is convex in x, so its maximum over the box is at a vertex.
                    for mask in 0..(1usize << dim) {
                        let corner = Vector::from_fn(dim, |i, _| if mask >> i & 1 == 1 { upper[i] } else { lower[i] });
                        MinkowskiNorm::randers(metric.clone(), &drift + &gradient * &corner).map_err(|_| {
                            FinslerError::invalid(format!(
                                "drift field violates |b|_a < 1 at domain corner {:?}",
                                corner.as_slice()
                            ))
                        })?;
                    }
                }
                _ => {
                    return Err(FinslerError::invalid(
                        "a varying drift field requires a bounded box domain",
                    ))
                }
            }
        }
        Ok(Self { dim, field: NormField::AffineRanders { metric, drift, gradient }, domain })
    }

    /// Riemannian metric given pointwise by a callback returning the metric matrix.
    pub fn riemannian_field<F>(dim: usize, metric: F, domain: ChartDomain) -> Self
    where
        F: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        Self { dim, field: NormField::Riemannian(Arc::new(metric)), domain }
    }

    /// Arbitrary norm field; all base-point derivatives use finite differences.
    pub fn custom<F>(dim: usize, field: F, domain: ChartDomain) -> Self
    where
        F: Fn(&Vector) -> Result<MinkowskiNorm> + Send + Sync + 'static,
    {
        Self { dim, field: NormField::Custom(Arc::new(field)), domain }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    /// Norm does not depend on the base point.
    pub fn is_flat(&self) -> bool {
        match &self.field {
            NormField::Constant(_) => true,
            NormField::AffineRanders { gradient, .. } => gradient.iter().all(|&g| g == 0.0),
            _ => false,
        }
    }

    /// Fundamental tensor independent of the reference vector.
    pub fn is_riemannian(&self) -> bool {
        match &self.field {
            NormField::Constant(n) => n.is_quadratic(),
            NormField::PoincareBall | NormField::Riemannian(_) => true,
            _ => false,
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim && self.domain.contains(x)
    }

    pub(crate) fn check_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim {
            return Err(FinslerError::invalid(format!(
                "point has dimension {}, manifold has dimension {}",
                x.len(),
                self.dim
            )));
        }
        if !self.domain.contains(x) {
            return Err(FinslerError::invalid(format!("point {:?} lies outside the chart domain", x.as_slice())));
        }
        Ok(())
    }

    fn poincare_factor(x: &Vector) -> f64 {
        let s = 1.0 - x.norm_squared();
        4.0 / (s * s)
    }

    /// The Minkowski norm on `T_xM`.
    pub fn norm_at(&self, x: &Vector) -> Result<MinkowskiNorm> {
        self.check_point(x)?;
        match &self.field {
            NormField::Constant(n) => Ok(n.clone()),
            NormField::PoincareBall => {
                MinkowskiNorm::euclidean(Matrix::identity(self.dim, self.dim) * Self::poincare_factor(x))
            }
            NormField::AffineRanders { metric, drift, gradient } => {
                MinkowskiNorm::randers(metric.clone(), drift + gradient * x)
            }
            NormField::Riemannian(f) => MinkowskiNorm::euclidean(f(x)),
            NormField::Custom(f) => {
                let n = f(x)?;
                if n.dim() != self.dim {
                    return Err(FinslerError::invalid("norm field returned a norm of the wrong dimension"));
                }
                Ok(n)
            }
        }
    }

    /// `g_ij(x, y)` without the domain check, used inside integrators.
    pub(crate) fn metric_tensor_unchecked(&self, x: &Vector, y: &Vector) -> Result<Matrix> {
        match &self.field {
            NormField::Constant(n) => n.fundamental_tensor_matrix(y),
            NormField::PoincareBall => {
                if y.iter().all(|&c| c == 0.0) {
                    return Err(FinslerError::DegenerateReferenceVector);
                }
                Ok(Matrix::identity(self.dim, self.dim) * Self::poincare_factor(x))
            }
            NormField::AffineRanders { metric, drift, gradient } => {
                MinkowskiNorm::randers(metric.clone(), drift + gradient * x)?.fundamental_tensor_matrix(y)
            }
            NormField::Riemannian(f) => {
                if y.iter().all(|&c| c == 0.0) {
                    return Err(FinslerError::DegenerateReferenceVector);
                }
                Ok(f(x))
            }
            NormField::Custom(f) => f(x)?.fundamental_tensor_matrix(y),
        }
    }

    /// Fundamental tensor matrix `g_ij(x, y)`.
    pub fn metric_tensor(&self, x: &Vector, y: &Vector) -> Result<Matrix> {
        self.check_point(x)?;
        self.metric_tensor_unchecked(x, y)
    }

    /// `∂g_ij/∂x^l` at fixed reference vector `y`, one matrix per `l`.
    pub(crate) fn metric_x_derivatives(&self, x: &Vector, y: &Vector) -> Result<Vec<Matrix>> {
        let n = self.dim;
        match &self.field {
            NormField::Constant(_) => Ok(vec![Matrix::zeros(n, n); n]),
            NormField::AffineRanders { gradient, .. } if gradient.iter().all(|&g| g == 0.0) => {
                Ok(vec![Matrix::zeros(n, n); n])
            }
            NormField::PoincareBall => {
                let s = 1.0 - x.norm_squared();
                let c = 16.0 / (s * s * s);
                Ok((0..n).map(|l| Matrix::identity(n, n) * (c * x[l])).collect())
            }
            _ => {
                let h = METRIC_DERIVATIVE_STEP;
                (0..n)
                    .map(|l| {
                        let mut xp = x.clone();
                        let mut xm = x.clone();
                        xp[l] += h;
                        xm[l] -= h;
                        let gp = self.metric_tensor_unchecked(&xp, y)?;
                        let gm = self.metric_tensor_unchecked(&xm, y)?;
                        Ok((gp - gm) / (2.0 * h))
                    })
                    .collect()
            }
        }
    }

    /// Cartan tensor at `(x, y)`; zero for Riemannian fields.
    pub(crate) fn cartan_unchecked(&self, x: &Vector, y: &Vector) -> Result<crate::norms::Tensor3> {
        match &self.field {
            NormField::PoincareBall | NormField::Riemannian(_) => {
                if y.iter().all(|&c| c == 0.0) {
                    return Err(FinslerError::DegenerateReferenceVector);
                }
                Ok(crate::norms::Tensor3::zeros(self.dim))
            }
            NormField::Constant(n) => n.cartan_tensor(y),
            NormField::AffineRanders { metric, drift, gradient } => {
                MinkowskiNorm::randers(metric.clone(), drift + gradient * x)?.cartan_tensor(y)
            }
            NormField::Custom(f) => f(x)?.cartan_tensor(y),
        }
    }

    /// Spray coefficients from closed forms, for the bundled curved models.
    ///
    /// Conformal ball, `λ = 2/(1 − |x|²)`: `G = (∂ln λ · y) y − ½|y|² ∇ln λ`.
    /// Affine Randers with `r = sym B`, `s = skew B`, `s_j = b^i s_ij`:
    /// `G^i = (e₀₀/(2F) − s₀) y^i + α s^i₀` with `e₀₀ = r₀₀ + 2β s₀`.
    pub(crate) fn closed_form_spray(&self, x: &Vector, y: &Vector) -> Option<Result<Vector>> {
        match &self.field {
            NormField::PoincareBall => {
                let s = 1.0 - x.norm_squared();
                let grad_ln = x * (2.0 / s);
                Some(Ok(y * grad_ln.dot(y) - grad_ln * (0.5 * y.norm_squared())))
            }
            NormField::AffineRanders { metric, drift, gradient } => Some((|| {
                let b = drift + gradient * x;
                MinkowskiNorm::randers(metric.clone(), b.clone())?;
                let alpha = y.dot(&(metric * y)).max(0.0).sqrt();
                let beta = b.dot(y);
                let f = alpha + beta;
                let r = (gradient + gradient.transpose()) * 0.5;
                let skew = (gradient - gradient.transpose()) * 0.5;
                let a_inv = norm_metric_inverse(metric)?;
                let b_up = &a_inv * &b;
                // s_j = b^i s_ij, s^i_0 = a^{ik} s_kj y^j
                let s_low = skew.transpose() * &b_up;
                let s0 = s_low.dot(y);
                let s_up0 = &a_inv * (&skew * y);
                let r00 = y.dot(&(&r * y));
                let e00 = r00 + 2.0 * beta * s0;
                Ok(y * (e00 / (2.0 * f) - s0) + s_up0 * alpha)
            })()),
            _ => None,
        }
    }

    /// Inverse exponential map from closed forms, when the model has one.
    ///
    /// Conformal ball: `log_x y = (1 − |x|²) artanh|u| · u/|u|` with `u = (−x) ⊕ y`.
    /// Affine Randers with symmetric `B` (exact drift `b = dφ`): geodesics are
    /// straight segments and `ρ(x, y) = α(y − x) + φ(y) − φ(x)`.
    pub(crate) fn closed_form_log(&self, x: &Vector, y: &Vector) -> Option<Result<Vector>> {
        match &self.field {
            NormField::PoincareBall => {
                let u = mobius_add(&-x, y);
                let nu = u.norm();
                if nu == 0.0 {
                    return Some(Ok(Vector::zeros(self.dim)));
                }
                Some(Ok(u * ((1.0 - x.norm_squared()) * nu.atanh() / nu)))
            }
            NormField::AffineRanders { metric, drift, gradient } if is_symmetric(gradient) => Some((|| {
                let chord = y - x;
                let alpha = chord.dot(&(metric * &chord)).max(0.0).sqrt();
                if alpha == 0.0 {
                    return Ok(Vector::zeros(self.dim));
                }
                let phi = |p: &Vector| drift.dot(p) + 0.5 * p.dot(&(gradient * p));
                let rho = alpha + phi(y) - phi(x);
                let speed = MinkowskiNorm::randers(metric.clone(), drift + gradient * x)?.norm(&chord)?;
                Ok(chord * (rho / speed))
            })()),
            _ => None,
        }
    }

    /// The manifold with reverse norms `F⃖(v) = F(−v)` at every point.
    pub fn reversed(&self) -> Self {
        let field = match &self.field {
            NormField::Constant(n) => NormField::Constant(n.reversed()),
            NormField::PoincareBall => NormField::PoincareBall,
            NormField::AffineRanders { metric, drift, gradient } => NormField::AffineRanders {
                metric: metric.clone(),
                drift: -drift,
                gradient: -gradient,
            },
            NormField::Riemannian(f) => NormField::Riemannian(Arc::clone(f)),
            NormField::Custom(f) => {
                let inner = Arc::clone(f);
                NormField::Custom(Arc::new(move |x: &Vector| Ok(inner(x)?.reversed())))
            }
        };
        Self { dim: self.dim, field, domain: self.domain.clone() }
    }

    /// Serializable description when the field is one of the bundled models.
    pub fn to_spec(&self) -> Option<ManifoldSpec> {
        let domain = match &self.domain {
            ChartDomain::Box { lower, upper } => Some(DomainSpec {
                lower: lower.iter().copied().collect(),
                upper: upper.iter().copied().collect(),
            }),
            _ => None,
        };
        match &self.field {
            NormField::Constant(n) => Some(ManifoldSpec::Flat { norm: n.to_spec()? }),
            NormField::PoincareBall if self.dim == 2 => Some(ManifoldSpec::Riemannian {
                metric: RiemannianModel::PoincareDisk,
            }),
            NormField::AffineRanders { metric, drift, gradient } => {
                let constant = gradient.iter().all(|&g| g == 0.0);
                Some(ManifoldSpec::RandersField {
                    metric: rows(metric),
                    drift_field: if constant { DriftField::Constant } else { DriftField::Linear },
                    drift: drift.iter().copied().collect(),
                    drift_gradient: if constant { None } else { Some(rows(gradient)) },
                    domain,
                })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiemannianModel {
    PoincareDisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftField {
    Constant,
    /// `b(x) = drift + drift_gradient · x`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// JSON form of a manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ManifoldSpec {
    Flat {
        norm: NormSpec,
    },
    Riemannian {
        metric: RiemannianModel,
    },
    RandersField {
        metric: Vec<Vec<f64>>,
        drift_field: DriftField,
        drift: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift_gradient: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<DomainSpec>,
    },
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<ChartedManifold> {
        match self {
            ManifoldSpec::Flat { norm } => Ok(ChartedManifold::flat(norm.build()?)),
            ManifoldSpec::Riemannian { metric: RiemannianModel::PoincareDisk } => Ok(ChartedManifold::poincare_disk()),
            ManifoldSpec::RandersField { metric, drift_field, drift, drift_gradient, domain } => {
                let metric = matrix_from_rows(metric)?;
                let n = metric.nrows();
                let drift = Vector::from_column_slice(drift);
                let domain = match domain {
                    None => ChartDomain::Whole,
                    Some(d) => {
                        if d.lower.len() != n || d.upper.len() != n {
                            return Err(FinslerError::invalid("domain bounds must match the dimension"));
                        }
                        if d.lower.iter().zip(&d.upper).any(|(lo, hi)| !(lo < hi)) {
                            return Err(FinslerError::invalid("domain requires lower < upper on every axis"));
                        }
                        ChartDomain::Box {
                            lower: Vector::from_column_slice(&d.lower),
                            upper: Vector::from_column_slice(&d.upper),
                        }
                    }
                };
                let gradient = match (drift_field, drift_gradient) {
                    (DriftField::Constant, None) => Matrix::zeros(n, n),
                    (DriftField::Constant, Some(_)) => {
                        return Err(FinslerError::invalid("drift_gradient is only allowed with drift_field \"linear\""))
                    }
                    (DriftField::Linear, Some(g)) => matrix_from_rows(g)?,
                    (DriftField::Linear, None) => {
                        return Err(FinslerError::invalid("drift_field \"linear\" requires drift_gradient"))
                    }
                };
                ChartedManifold::affine_randers(metric, drift, gradient, domain)
            }
        }
    }
}

impl TryFrom<ManifoldSpec> for ChartedManifold {
    type Error = FinslerError;

    fn try_from(spec: ManifoldSpec) -> Result<Self> {
        spec.build()
    }
}

fn is_symmetric(m: &Matrix) -> bool {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= 1e-14 * scale
}

fn norm_metric_inverse(metric: &Matrix) -> Result<Matrix> {
    metric
        .clone()
        .try_inverse()
        .ok_or_else(|| FinslerError::invalid("metric matrix is singular"))
}

/// Möbius addition on the unit ball.
fn mobius_add(a: &Vector, b: &Vector) -> Vector {
    let ab = a.dot(b);
    let a2 = a.norm_squared();
    let b2 = b.norm_squared();
    (a * (1.0 + 2.0 * ab + b2) + b * (1.0 - a2)) / (1.0 + 2.0 * ab + a2 * b2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifold_json_forms() {
        let flat: ManifoldSpec =
            serde_json::from_str(r#"{"kind":"flat","norm":{"kind":"euclidean","metric":[[1,0],[0,1]]}}"#).unwrap();
        assert!(flat.build().unwrap().is_flat());
        let disk: ManifoldSpec = serde_json::from_str(r#"{"kind":"riemannian","metric":"poincare-disk"}"#).unwrap();
        let m = disk.build().unwrap();
        assert!(m.is_riemannian() && !m.is_flat());
        assert_eq!(m.to_spec(), Some(disk));
        let rf: ManifoldSpec = serde_json::from_str(
            r#"{"kind":"randers-field","metric":[[1,0],[0,1]],"drift_field":"constant","drift":[0.3,0]}"#,
        )
        .unwrap();
        let m = rf.build().unwrap();
        assert!(m.is_flat() && !m.is_riemannian());
        assert_eq!(m.to_spec(), Some(rf));
    }

    #[test]
    fn linear_drift_needs_a_valid_box() {
        let bad = r#"{"kind":"randers-field","metric":[[1,0],[0,1]],"drift_field":"linear","drift":[0,0],
                      "drift_gradient":[[0.2,0],[0,0.2]]}"#;
        let spec: ManifoldSpec = serde_json::from_str(bad).unwrap();
        assert!(spec.build().is_err());
        let too_big = r#"{"kind":"randers-field","metric":[[1,0],[0,1]],"drift_field":"linear","drift":[0,0],
                      "drift_gradient":[[0.2,0],[0,0.2]],"domain":{"lower":[-5,-5],"upper":[5,5]}}"#;
        let spec: ManifoldSpec = serde_json::from_str(too_big).unwrap();
        assert!(spec.build().is_err());
        let ok = r#"{"kind":"randers-field","metric":[[1,0],[0,1]],"drift_field":"linear","drift":[0,0],
                      "drift_gradient":[[0.2,0],[0,0.2]],"domain":{"lower":[-2,-2],"upper":[2,2]}}"#;
        let spec: ManifoldSpec = serde_json::from_str(ok).unwrap();
        let m = spec.build().unwrap();
        assert!(!m.is_flat());
        assert!(m.norm_at(&Vector::from_column_slice(&[3.0, 0.0])).is_err());
        assert_eq!(m.to_spec(), Some(spec));
    }

    #[test]
    fn poincare_derivative_matches_differences() {
        let m = ChartedManifold::poincare_disk();
        let x = Vector::from_column_slice(&[0.3, -0.2]);
        let y = Vector::from_column_slice(&[1.0, 0.5]);
        let exact = m.metric_x_derivatives(&x, &y).unwrap();
        let h = 1e-6;
        for l in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += h;
            xm[l] -= h;
            let fd = (m.metric_tensor(&xp, &y).unwrap() - m.metric_tensor(&xm, &y).unwrap()) / (2.0 * h);
            assert!((&exact[l] - fd).amax() < 1e-6);
        }
    }

    #[test]
    fn reversed_field_negates_drift() {
        let m = ChartedManifold::affine_randers(
            Matrix::identity(2, 2),
            Vector::from_column_slice(&[0.1, 0.0]),
            Matrix::identity(2, 2) * 0.1,
            ChartDomain::Box { lower: Vector::from_element(2, -2.0), upper: Vector::from_element(2, 2.0) },
        )
        .unwrap();
        let r = m.reversed();
        let x = Vector::from_column_slice(&[0.5, 1.0]);
        let v = Vector::from_column_slice(&[0.2, -0.7]);
        let a = m.norm_at(&x).unwrap().norm(&(-&v)).unwrap();
        let b = r.norm_at(&x).unwrap().norm(&v).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}
