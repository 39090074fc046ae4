//! Geodesics: exponential map by fixed-step RK4 on the spray, inverse by shooting.

use serde::Serialize;

use super::ChartedManifold;
use crate::error::{FinslerError, Result};
use crate::norms::{TangentVector, Vector};
use crate::ode::rk4_step;

/// Default number of RK4 steps on `t ∈ [0, 1]`.
pub const DEFAULT_STEPS: usize = 128;

/// Options for the Newton shooting solve of the inverse exponential map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub steps: usize,
    /// Finite-difference step for the shooting Jacobian.
    pub jacobian_step: f64,
    /// Coordinate residual below which the solve counts as converged.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { steps: DEFAULT_STEPS, jacobian_step: 1e-5, tol: 1e-8, max_iters: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// A sampled solution of the geodesic equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicSolution {
    pub start: Vec<f64>,
    pub initial_velocity: Vec<f64>,
    pub steps: usize,
    pub step_size: f64,
    pub samples: Vec<GeodesicSample>,
}

impl GeodesicSolution {
    pub fn endpoint(&self) -> Vector {
        Vector::from_column_slice(&self.samples.last().expect("nonempty trajectory").point)
    }

    pub fn end_velocity(&self) -> Vector {
        Vector::from_column_slice(&self.samples.last().expect("nonempty trajectory").velocity)
    }

    /// `F(ċ(t))` at every sample.
    pub fn speeds(&self, manifold: &ChartedManifold) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| {
                let x = Vector::from_column_slice(&s.point);
                manifold.norm_at(&x)?.norm(&Vector::from_column_slice(&s.velocity))
            })
            .collect()
    }
}

fn split(state: &Vector, n: usize) -> (Vector, Vector) {
    (state.rows(0, n).into_owned(), state.rows(n, n).into_owned())
}

impl ChartedManifold {
    /// Integrates the geodesic with `c(0) = x`, `ċ(0) = v` up to time `t_final`
    /// (negative times integrate backwards along the same geodesic).
    pub fn geodesic_flow(&self, x: &Vector, v: &Vector, t_final: f64, steps: usize) -> Result<GeodesicSolution> {
        self.check_point(x)?;
        let n = self.dim();
        if v.len() != n {
            return Err(FinslerError::invalid("velocity dimension does not match the manifold"));
        }
        if v.iter().any(|c| !c.is_finite()) || !t_final.is_finite() {
            return Err(FinslerError::invalid("non-finite geodesic input"));
        }
        let steps = steps.max(1);
        let h = t_final / steps as f64;
        let mut state = Vector::zeros(2 * n);
        state.rows_mut(0, n).copy_from(x);
        state.rows_mut(n, n).copy_from(v);
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(GeodesicSample { t: 0.0, point: x.iter().copied().collect(), velocity: v.iter().copied().collect() });
        let mut rhs = |t: f64, s: &Vector| -> Result<Vector> {
            let (p, q) = split(s, n);
            if !self.domain().contains(&p) {
                return Err(FinslerError::DomainEscape { time: t });
            }
            let acc = self.spray_unchecked(&p, &q)? * -2.0;
            let mut out = Vector::zeros(2 * n);
            out.rows_mut(0, n).copy_from(&q);
            out.rows_mut(n, n).copy_from(&acc);
            Ok(out)
        };
        for i in 0..steps {
            let t = h * i as f64;
            state = rk4_step(&mut rhs, t, &state, h)?;
            let t_next = if i + 1 == steps { t_final } else { h * (i + 1) as f64 };
            let (p, q) = split(&state, n);
            if !self.domain().contains(&p) {
                return Err(FinslerError::DomainEscape { time: t_next });
            }
            samples.push(GeodesicSample { t: t_next, point: p.iter().copied().collect(), velocity: q.iter().copied().collect() });
        }
        Ok(GeodesicSolution {
            start: x.iter().copied().collect(),
            initial_velocity: v.iter().copied().collect(),
            steps,
            step_size: h,
            samples,
        })
    }

    /// `exp_x(v) = c(1)`, with the full trajectory.
    pub fn exp_map(&self, x: &Vector, v: &Vector, steps: usize) -> Result<GeodesicSolution> {
        self.geodesic_flow(x, v, 1.0, steps)
    }

    /// Endpoint of `exp_x(v)` with the default step count.
    pub fn exp_point(&self, x: &Vector, v: &Vector) -> Result<Vector> {
        Ok(self.exp_map(x, v, DEFAULT_STEPS)?.endpoint())
    }

    /// Inverse exponential map `→xy`.
    pub fn log_map(&self, x: &Vector, y: &Vector) -> Result<TangentVector> {
        self.log_map_with(x, y, &ShootingOptions::default())
    }

    /// Inverse exponential map; closed forms are used for the bundled curved models
    /// and Newton shooting with `opts` otherwise.
    pub fn log_map_with(&self, x: &Vector, y: &Vector, opts: &ShootingOptions) -> Result<TangentVector> {
        self.check_point(x)?;
        self.check_point(y)?;
        if x == y {
            return Ok(TangentVector::zero(x.clone()));
        }
        if self.is_flat() {
            return TangentVector::new(x.clone(), y - x);
        }
        if let Some(v) = self.closed_form_log(x, y) {
            return TangentVector::new(x.clone(), v?);
        }
        self.log_map_shooting(x, y, opts)
    }

    /// Inverse exponential map by Newton shooting on the integrated exponential map,
    /// ignoring any closed form.
    pub fn log_map_shooting(&self, x: &Vector, y: &Vector, opts: &ShootingOptions) -> Result<TangentVector> {
        self.check_point(x)?;
        self.check_point(y)?;
        let n = self.dim();
        if x == y {
            return Ok(TangentVector::zero(x.clone()));
        }
        let chord = y - x;
        let shoot = |v: &Vector| -> Result<Vector> { Ok(self.exp_map(x, v, opts.steps)?.endpoint() - y) };

        // Shrink the chord until the trial geodesic stays inside the chart.
        let mut v = chord;
        let mut residual_vec = None;
        for _ in 0..60 {
            match shoot(&v) {
                Ok(r) => {
                    residual_vec = Some(r);
                    break;
                }
                Err(FinslerError::DomainEscape { .. }) => v *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let mut r = residual_vec.ok_or_else(|| FinslerError::NumericalFailure {
            what: "geodesic shooting initialization".into(),
            residual: f64::INFINITY,
        })?;
        let mut residual = r.amax();
        let floor = 1e-14 * y.amax().max(1.0);

        for _ in 0..opts.max_iters {
            if residual <= floor {
                break;
            }
            let h = opts.jacobian_step * v.amax().min(1.0);
            let mut jac = crate::norms::Matrix::zeros(n, n);
            for j in 0..n {
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[j] += h;
                vm[j] -= h;
                let col = (shoot(&vp)? - shoot(&vm)?) / (2.0 * h);
                jac.set_column(j, &col);
            }
            let step = match jac.lu().solve(&(-&r)) {
                Some(s) => s,
                None => break,
            };
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let candidate = &v + &step * t;
                match shoot(&candidate) {
                    Ok(rc) if rc.amax() < residual => {
                        v = candidate;
                        residual = rc.amax();
                        r = rc;
                        accepted = true;
                        break;
                    }
                    Ok(_) | Err(FinslerError::DomainEscape { .. }) => t *= 0.5,
                    Err(e) => return Err(e),
                }
            }
            if !accepted {
                break;
            }
        }
        if residual > opts.tol {
            return Err(FinslerError::NumericalFailure { what: "geodesic shooting".into(), residual });
        }
        TangentVector::new(x.clone(), v)
    }

    /// Forward distance `ρ(x, y) = F(→xy)`.
    pub fn distance(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let v = self.log_map(x, y)?;
        self.norm_at(x)?.norm(&v.components)
    }

    /// `F` of a tangent vector at its base point.
    pub fn norm(&self, v: &TangentVector) -> Result<f64> {
        self.norm_at(&v.base)?.norm(&v.components)
    }
}
