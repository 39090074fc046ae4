//! Charted manifolds carrying a Finsler structure.
//!
//! Everything lives in a single coordinate chart. Geodesics integrate the
//! spray `ẍ + 2G(x, ẋ) = 0` with fixed-step RK4; the inverse exponential map
//! is found by Newton shooting. Charts are assumed uniquely geodesic, so no
//! cut-locus detection is attempted.

mod curvature;
mod geodesic;
mod manifold;
mod spray;

use serde::{Deserialize, Serialize};

pub use curvature::{SecondVariationReport, SECOND_VARIATION_STEP};
pub use geodesic::{GeodesicSample, GeodesicSolution, ShootingOptions, DEFAULT_STEPS};
pub use manifold::{ChartDomain, ChartedManifold, DomainSpec, DriftField, ManifoldSpec, RiemannianModel, METRIC_DERIVATIVE_STEP};
pub use spray::Christoffel;

use crate::error::{FinslerError, Result};

/// User-supplied curvature and anisotropy constants.
///
/// `k` bounds the flag curvature from above and `−β²` from below; `δ` and
/// `δ′` bound the tangent curvature below and above; `C` and `D` bound the
/// norm-ratio constants; `inj` bounds the injectivity radius from below.
/// Zero `k`, `β` or `δ` select the continuous limits of the bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub k: f64,
    pub beta: f64,
    pub delta: f64,
    pub delta_prime: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub inj: f64,
}

impl Default for CurvatureBounds {
    /// The flat Euclidean limit.
    fn default() -> Self {
        Self { k: 0.0, beta: 0.0, delta: 0.0, delta_prime: 0.0, c: 1.0, d: 1.0, inj: f64::INFINITY }
    }
}

impl CurvatureBounds {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(FinslerError::invalid(format!("{name} must be finite and >= 0 (got {x})")))
            }
        };
        finite_nonneg("k", self.k)?;
        finite_nonneg("beta", self.beta)?;
        finite_nonneg("delta", self.delta)?;
        finite_nonneg("delta_prime", self.delta_prime)?;
        if !(self.c >= 1.0 && self.c.is_finite()) || !(self.d >= 1.0 && self.d.is_finite()) {
            return Err(FinslerError::invalid("C and D must be finite and >= 1"));
        }
        if !(self.inj > 0.0) {
            return Err(FinslerError::invalid("inj must be > 0"));
        }
        Ok(())
    }
}
