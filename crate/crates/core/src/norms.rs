//! Minkowski norms on a single tangent space.
//!
//! A [`MinkowskiNorm`] evaluates `F` and the quantities derived from `F²`:
//! the fundamental tensor `g_V`, the Cartan tensor, the Legendre map
//! `V ↦ g_V(V, ·)` with its inverse, and the dual norm `F*`. Euclidean and
//! Randers norms carry closed forms; custom norms fall back to central
//! finite differences of `F²`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Step (relative to `F(V)`) for second-order differences of `F²`.
pub const SECOND_ORDER_STEP: f64 = 1e-4;
/// Step (relative to `F(V)`) for third-order differences of `F²`.
pub const THIRD_ORDER_STEP: f64 = 1e-3;
/// Step (relative to `F(V)`) for first-order differences of `F²`.
const FIRST_ORDER_STEP: f64 = 1e-5;

const LEGENDRE_TOL: f64 = 1e-10;
const LEGENDRE_MAX_ITERS: usize = 50;

/// A vector in the tangent space at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Vector,
    pub components: Vector,
}

impl TangentVector {
    pub fn new(base: Vector, components: Vector) -> Result<Self> {
        if base.len() != components.len() {
            return Err(FinslerError::invalid(format!(
                "tangent vector has {} components but base point has dimension {}",
                components.len(),
                base.len()
            )));
        }
        Ok(Self { base, components })
    }

    pub fn zero(base: Vector) -> Self {
        let n = base.len();
        Self { base, components: Vector::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

/// A covector (element of the dual frame) at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    pub base: Vector,
    pub components: Vector,
}

impl Covector {
    pub fn new(base: Vector, components: Vector) -> Result<Self> {
        if base.len() != components.len() {
            return Err(FinslerError::invalid(format!(
                "covector has {} components but base point has dimension {}",
                components.len(),
                base.len()
            )));
        }
        Ok(Self { base, components })
    }

    /// Dual pairing `⟨ξ, v⟩`.
    pub fn pair(&self, v: &Vector) -> f64 {
        self.components.dot(v)
    }
}

/// Fully symmetric 3-index array, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.data[(i * self.n + j) * self.n + k] = value;
    }

    /// Full contraction `T_ijk x^i y^j z^k`.
    pub fn contract(&self, x: &Vector, y: &Vector, z: &Vector) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..n {
                    acc += self.get(i, j, k) * xy * z[k];
                }
            }
        }
        acc
    }

    /// Matrix `T_ijk x^i`.
    pub fn contract_first(&self, x: &Vector) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, n, |j, k| (0..n).map(|i| self.get(i, j, k) * x[i]).sum())
    }
}

type NormFn = dyn Fn(&Vector) -> f64 + Send + Sync;

#[derive(Clone)]
struct CustomNorm {
    dim: usize,
    eval: Arc<NormFn>,
}

#[derive(Clone)]
enum NormKind {
    Euclidean { metric: Matrix, metric_inv: Matrix },
    Randers { metric: Matrix, metric_inv: Matrix, drift: Vector },
    Custom(CustomNorm),
}

/// A smooth, strongly convex, positively 1-homogeneous norm on `ℝⁿ`.
#[derive(Clone)]
pub struct MinkowskiNorm {
    kind: NormKind,
}

impl fmt::Debug for MinkowskiNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NormKind::Euclidean { metric, .. } => {
                f.debug_struct("Euclidean").field("metric", metric).finish()
            }
            NormKind::Randers { metric, drift, .. } => f
                .debug_struct("Randers")
                .field("metric", metric)
                .field("drift", drift)
                .finish(),
            NormKind::Custom(c) => f.debug_struct("Custom").field("dim", &c.dim).finish(),
        }
    }
}

fn check_metric(metric: &Matrix) -> Result<Matrix> {
    let n = metric.nrows();
    if n == 0 || metric.ncols() != n {
        return Err(FinslerError::invalid("metric must be a nonempty square matrix"));
    }
    if metric.iter().any(|x| !x.is_finite()) {
        return Err(FinslerError::invalid("metric has non-finite entries"));
    }
    let scale = metric.amax().max(1.0);
    if (metric - metric.transpose()).amax() > 1e-12 * scale {
        return Err(FinslerError::invalid("metric must be symmetric"));
    }
    let chol = metric
        .clone()
        .cholesky()
        .ok_or_else(|| FinslerError::invalid("metric must be positive definite"))?;
    Ok(chol.inverse())
}

fn check_finite(v: &Vector) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(FinslerError::invalid("vector has non-finite components"))
    }
}

impl MinkowskiNorm {
    /// Quadratic norm `√(vᵀAv)`.
    pub fn euclidean(metric: Matrix) -> Result<Self> {
        let metric_inv = check_metric(&metric)?;
        Ok(Self { kind: NormKind::Euclidean { metric, metric_inv } })
    }

    pub fn identity(dim: usize) -> Self {
        let metric = Matrix::identity(dim, dim);
        Self { kind: NormKind::Euclidean { metric_inv: metric.clone(), metric } }
    }

    /// Randers norm `√(vᵀAv) + b·v`; requires `‖b‖_A < 1`.
    pub fn randers(metric: Matrix, drift: Vector) -> Result<Self> {
        let metric_inv = check_metric(&metric)?;
        if drift.len() != metric.nrows() {
            return Err(FinslerError::invalid("drift length does not match metric dimension"));
        }
        check_finite(&drift)?;
        let b_norm = drift.dot(&(&metric_inv * &drift)).sqrt();
        if b_norm >= 1.0 {
            return Err(FinslerError::invalid(format!(
                "Randers drift must satisfy |b|_a < 1 (got {b_norm})"
            )));
        }
        Ok(Self { kind: NormKind::Randers { metric, metric_inv, drift } })
    }

    /// A norm given only by its values; derivatives are taken by finite differences.
    ///
    /// The caller is responsible for homogeneity and strong convexity.
    pub fn custom<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        Self { kind: NormKind::Custom(CustomNorm { dim, eval: Arc::new(eval) }) }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            NormKind::Euclidean { metric, .. } | NormKind::Randers { metric, .. } => metric.nrows(),
            NormKind::Custom(c) => c.dim,
        }
    }

    /// True when `F(−v) = F(v)` and `g_V` does not depend on `V`.
    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, NormKind::Euclidean { .. })
    }

    /// `‖b‖_A` for Randers norms, zero for Euclidean ones.
    pub fn drift_strength(&self) -> Option<f64> {
        match &self.kind {
            NormKind::Euclidean { .. } => Some(0.0),
            NormKind::Randers { metric_inv, drift, .. } => {
                Some(drift.dot(&(metric_inv * drift)).sqrt())
            }
            NormKind::Custom(_) => None,
        }
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(FinslerError::invalid(format!(
                "expected a vector of length {}, got {}",
                self.dim(),
                v.len()
            )));
        }
        Ok(())
    }

    /// Unchecked evaluation of `F(v)`.
    pub(crate) fn value(&self, v: &Vector) -> f64 {
        match &self.kind {
            NormKind::Euclidean { metric, .. } => v.dot(&(metric * v)).max(0.0).sqrt(),
            NormKind::Randers { metric, drift, .. } => {
                v.dot(&(metric * v)).max(0.0).sqrt() + drift.dot(v)
            }
            NormKind::Custom(c) => (c.eval)(v),
        }
    }

    fn value_sq(&self, v: &Vector) -> f64 {
        let f = self.value(v);
        f * f
    }

    /// `F(v)`. Zero exactly when `v = 0`.
    pub fn norm(&self, v: &Vector) -> Result<f64> {
        self.check_dim(v)?;
        check_finite(v)?;
        Ok(self.value(v))
    }

    fn reference_scale(&self, v: &Vector) -> Result<f64> {
        self.check_dim(v)?;
        check_finite(v)?;
        if v.iter().all(|&x| x == 0.0) {
            return Err(FinslerError::DegenerateReferenceVector);
        }
        Ok(self.value(v))
    }

    /// Matrix of the fundamental tensor `[g_V(e_i, e_j)]`.
    pub fn fundamental_tensor_matrix(&self, v: &Vector) -> Result<Matrix> {
        let scale = self.reference_scale(v)?;
        Ok(match &self.kind {
            NormKind::Euclidean { metric, .. } => metric.clone(),
            NormKind::Randers { metric, drift, .. } => {
                let r = RandersParts::new(metric, drift, v);
                &r.l * r.l.transpose() + r.h * r.f
            }
            NormKind::Custom(_) => {
                let n = self.dim();
                let h = SECOND_ORDER_STEP * scale;
                let mut g = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let mut ei = Vector::zeros(n);
                        ei[i] = h;
                        let mut ej = Vector::zeros(n);
                        ej[j] = h;
                        let d = self.value_sq(&(v + &ei + &ej))
                            - self.value_sq(&(v + &ei - &ej))
                            - self.value_sq(&(v - &ei + &ej))
                            + self.value_sq(&(v - &ei - &ej));
                        let gij = 0.5 * d / (4.0 * h * h);
                        g[(i, j)] = gij;
                        g[(j, i)] = gij;
                    }
                }
                g
            }
        })
    }

    /// `g_V(X, Y)`.
    pub fn fundamental_tensor(&self, v: &Vector, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let g = self.fundamental_tensor_matrix(v)?;
        Ok(x.dot(&(g * y)))
    }

    /// Cartan tensor `C_ijk = ⟨e_i, e_j, e_k⟩_V`.
    pub fn cartan_tensor(&self, v: &Vector) -> Result<Tensor3> {
        let scale = self.reference_scale(v)?;
        let n = self.dim();
        let mut c = Tensor3::zeros(n);
        match &self.kind {
            NormKind::Euclidean { .. } => {}
            NormKind::Randers { metric, drift, .. } => {
                let r = RandersParts::new(metric, drift, v);
                let ratio = r.f / r.alpha;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let t = r.h[(i, k)] * r.l[j] + r.h[(j, k)] * r.l[i] + r.h[(i, j)] * r.l[k]
                                - ratio
                                    * (r.h[(i, k)] * r.u[j]
                                        + r.h[(j, k)] * r.u[i]
                                        + r.h[(i, j)] * r.u[k]);
                            c.set(i, j, k, 0.5 * t);
                        }
                    }
                }
            }
            NormKind::Custom(_) => {
                let h = THIRD_ORDER_STEP * scale;
                for i in 0..n {
                    for j in i..n {
                        for k in j..n {
                            let mut acc = 0.0;
                            for si in [1.0, -1.0] {
                                for sj in [1.0, -1.0] {
                                    for sk in [1.0, -1.0] {
                                        let mut w = v.clone();
                                        w[i] += si * h;
                                        w[j] += sj * h;
                                        w[k] += sk * h;
                                        acc += si * sj * sk * self.value_sq(&w);
                                    }
                                }
                            }
                            let value = 0.25 * acc / (8.0 * h * h * h);
                            for (a, b, d) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                                c.set(a, b, d, value);
                            }
                        }
                    }
                }
            }
        }
        Ok(c)
    }

    /// `⟨X, Y, Z⟩_V`.
    pub fn cartan_term(&self, v: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        self.check_dim(z)?;
        Ok(self.cartan_tensor(v)?.contract(x, y, z))
    }

    /// Legendre map `v ↦ g_v(v, ·)`, with `0 ↦ 0`.
    pub fn legendre(&self, v: &Vector) -> Result<Vector> {
        self.check_dim(v)?;
        check_finite(v)?;
        if v.iter().all(|&x| x == 0.0) {
            return Ok(Vector::zeros(v.len()));
        }
        Ok(self.legendre_unchecked(v))
    }

    fn legendre_unchecked(&self, v: &Vector) -> Vector {
        match &self.kind {
            NormKind::Euclidean { metric, .. } => metric * v,
            NormKind::Randers { metric, drift, .. } => {
                let r = RandersParts::new(metric, drift, v);
                r.l * r.f
            }
            NormKind::Custom(_) => {
                // Gradient of F²/2, which equals g_v(v, ·) by homogeneity.
                let n = v.len();
                let h = FIRST_ORDER_STEP * self.value(v);
                Vector::from_fn(n, |i, _| {
                    let mut p = v.clone();
                    let mut m = v.clone();
                    p[i] += h;
                    m[i] -= h;
                    0.5 * (self.value_sq(&p) - self.value_sq(&m)) / (2.0 * h)
                })
            }
        }
    }

    /// Inverse Legendre map, solved by damped Newton iteration.
    pub fn legendre_inverse(&self, xi: &Vector) -> Result<Vector> {
        self.check_dim(xi)?;
        check_finite(xi)?;
        let n = xi.len();
        let scale = xi.amax();
        if scale == 0.0 {
            return Ok(Vector::zeros(n));
        }
        if let NormKind::Euclidean { metric_inv, .. } = &self.kind {
            return Ok(metric_inv * xi);
        }
        // ℓ is 1-homogeneous: solve for the rescaled covector.
        let target = xi / scale;
        let mut reference = Vector::zeros(n);
        reference[0] = 1.0;
        let mut v = solve_spd(&self.fundamental_tensor_matrix(&reference)?, &target)
            .ok_or_else(|| FinslerError::NumericalFailure {
                what: "Legendre inverse initialization".into(),
                residual: f64::NAN,
            })?;
        let mut residual_vec = self.legendre_unchecked(&v) - &target;
        let mut residual = residual_vec.amax();
        for _ in 0..LEGENDRE_MAX_ITERS {
            if residual <= 1e-3 * LEGENDRE_TOL {
                break;
            }
            let g = self.fundamental_tensor_matrix(&v)?;
            let step = match solve_spd(&g, &(-&residual_vec)) {
                Some(s) => s,
                None => break,
            };
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-10 {
                let candidate = &v + &step * t;
                if candidate.iter().any(|&x| x != 0.0) {
                    let r = self.legendre_unchecked(&candidate) - &target;
                    let rn = r.amax();
                    if rn < residual {
                        v = candidate;
                        residual_vec = r;
                        residual = rn;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if residual > LEGENDRE_TOL {
            return Err(FinslerError::NumericalFailure {
                what: "Legendre inverse".into(),
                residual: residual * scale,
            });
        }
        Ok(v * scale)
    }

    /// Dual norm `F*(ξ) = F(ℓ⁻¹(ξ))`.
    pub fn dual_norm(&self, xi: &Vector) -> Result<f64> {
        if let NormKind::Euclidean { metric_inv, .. } = &self.kind {
            self.check_dim(xi)?;
            check_finite(xi)?;
            return Ok(xi.dot(&(metric_inv * xi)).max(0.0).sqrt());
        }
        let v = self.legendre_inverse(xi)?;
        Ok(self.value(&v))
    }

    /// Reverse norm `v ↦ F(−v)`.
    pub fn reversed(&self) -> Self {
        match &self.kind {
            NormKind::Euclidean { .. } => self.clone(),
            NormKind::Randers { metric, metric_inv, drift } => Self {
                kind: NormKind::Randers {
                    metric: metric.clone(),
                    metric_inv: metric_inv.clone(),
                    drift: -drift,
                },
            },
            NormKind::Custom(c) => {
                let inner = Arc::clone(&c.eval);
                Self::custom(c.dim, move |v| inner(&(-v)))
            }
        }
    }

    /// Serializable description, unavailable for custom norms.
    pub fn to_spec(&self) -> Option<NormSpec> {
        match &self.kind {
            NormKind::Euclidean { metric, .. } => Some(NormSpec::Euclidean { metric: rows(metric) }),
            NormKind::Randers { metric, drift, .. } => Some(NormSpec::Randers {
                metric: rows(metric),
                drift: drift.iter().copied().collect(),
            }),
            NormKind::Custom(_) => None,
        }
    }
}

/// Intermediate quantities of a Randers norm at `v`:
/// `α = √(vᵀAv)`, `u = Av/α`, `l = u + b` (the gradient of F),
/// `F = α + b·v`, and `h = (A − uuᵀ)/α` (the Hessian of F).
struct RandersParts {
    alpha: f64,
    f: f64,
    u: Vector,
    l: Vector,
    h: Matrix,
}

impl RandersParts {
    fn new(metric: &Matrix, drift: &Vector, v: &Vector) -> Self {
        let av = metric * v;
        let alpha = v.dot(&av).sqrt();
        let u = av / alpha;
        let l = &u + drift;
        let f = alpha + drift.dot(v);
        let h = (metric - &u * u.transpose()) / alpha;
        Self { alpha, f, u, l, h }
    }
}

pub(crate) fn solve_spd(g: &Matrix, rhs: &Vector) -> Option<Vector> {
    match g.clone().cholesky() {
        Some(c) => Some(c.solve(rhs)),
        None => g.clone().lu().solve(rhs),
    }
}

pub(crate) fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(FinslerError::invalid("matrix must be nonempty"));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(FinslerError::invalid("matrix rows have unequal lengths"));
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// JSON form of a norm: `{"kind":"euclidean","metric":[[...]]}` or
/// `{"kind":"randers","metric":[[...]],"drift":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NormSpec {
    Euclidean { metric: Vec<Vec<f64>> },
    Randers { metric: Vec<Vec<f64>>, drift: Vec<f64> },
}

impl NormSpec {
    pub fn build(&self) -> Result<MinkowskiNorm> {
        match self {
            NormSpec::Euclidean { metric } => MinkowskiNorm::euclidean(matrix_from_rows(metric)?),
            NormSpec::Randers { metric, drift } => MinkowskiNorm::randers(
                matrix_from_rows(metric)?,
                Vector::from_column_slice(drift),
            ),
        }
    }
}

impl TryFrom<NormSpec> for MinkowskiNorm {
    type Error = FinslerError;

    fn try_from(spec: NormSpec) -> Result<Self> {
        spec.build()
    }
}
