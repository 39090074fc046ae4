//! p-means: continuous gradient flow and the discrete descent with a Hessian-majorant step.

use super::objective::{energy_differential, p_energy};
use super::report::{DescentCheck, SolverReport, Termination, TraceRow};
use crate::bounds::{existence_ball, step_constant_ch, MeanProblemBounds};
use crate::error::{FinslerError, Result};
use crate::geometry::{ChartedManifold, CurvatureBounds};
use crate::measure::WeightedSampleMeasure;
use crate::norms::Vector;

/// Default dual-norm tolerance on the gradient.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default iteration cap of the discrete algorithm.
pub const DEFAULT_MAX_ITERS: usize = 10_000;
/// Default flow step.
pub const DEFAULT_DT: f64 = 1e-2;
/// Default flow horizon.
pub const DEFAULT_HORIZON: f64 = 100.0;
/// Per-step objective increase tolerated by the flows before the step is halved.
pub const FLOW_MONOTONE_TOL: f64 = 1e-10;
/// Slack in the discrete descent inequality.
pub const DESCENT_SLACK: f64 = 1e-12;
/// Distance kept from an atom when `1 < p < 2` flow steps would land on it.
pub const ATOM_CLIP: f64 = 1e-9;
const MAX_HALVINGS: usize = 40;

/// Explicit-step settings for the flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub dt: f64,
    pub horizon: f64,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, horizon: DEFAULT_HORIZON, tol: DEFAULT_TOL, max_steps: 1_000_000 }
    }
}

impl FlowOptions {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(FinslerError::invalid("dt must be > 0 and horizon >= 0, both finite"));
        }
        if !(self.tol >= 0.0) {
            return Err(FinslerError::invalid("tolerance must be >= 0"));
        }
        Ok(())
    }
}

/// Settings of the discrete descent.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Step constant `C_H`; estimated on the existence ball when absent.
    pub step_constant: Option<f64>,
    /// Center `x₀` of the support ball; defaults to the start point.
    pub ball_center: Option<Vector>,
    /// Support radius `R`; defaults to the largest forward distance from the center to an atom.
    pub support_radius: Option<f64>,
    pub seed: u64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS, step_constant: None, ball_center: None, support_radius: None, seed: 0 }
    }
}

/// Descent vector `ℓ⁻¹(−d𝓔)` at `x` and its norm `F*(−d𝓔)`.
fn descent(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x: &Vector, p: f64) -> Result<(Vector, f64)> {
    let xi = energy_differential(manifold, mu, x, p)?;
    let norm = manifold.norm_at(x)?;
    let v = norm.legendre_inverse(&(-xi.components))?;
    let f = norm.norm(&v)?;
    Ok((v, f))
}

fn row(iteration: usize, time: Option<f64>, x: &Vector, objective: f64, gradient_norm: f64) -> TraceRow {
    TraceRow {
        iteration,
        time,
        point: x.iter().copied().collect(),
        objective,
        gradient_norm,
        predicted_rate: None,
        observed_rate: None,
    }
}

/// Pulls a step back when it would end within [`ATOM_CLIP`] of an atom other than `x`.
fn clip_near_atoms(mu: &WeightedSampleMeasure, x: &Vector, step: Vector, end: &Vector) -> Option<Vector> {
    let len = step.amax();
    let hits = mu.atoms().iter().any(|a| (&a.point - end).amax() < ATOM_CLIP && (&a.point - x).amax() >= ATOM_CLIP);
    (hits && len > ATOM_CLIP).then(|| step * (1.0 - ATOM_CLIP / len))
}

/// Integrates `x′ = grad(−𝓔_{μ,p})` with explicit geodesic Euler steps `x ← exp_x(dt · grad(−𝓔))`.
///
/// A step that raises the objective by more than [`FLOW_MONOTONE_TOL`] is halved.
pub fn mean_gradient_flow(
    manifold: &ChartedManifold,
    mu: &WeightedSampleMeasure,
    p: f64,
    x0: &Vector,
    opts: &FlowOptions,
) -> Result<SolverReport> {
    opts.validate()?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(FinslerError::invalid("the mean flow needs p > 1; use the median flow for p = 1"));
    }
    manifold.check_point(x0)?;
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut e = p_energy(manifold, mu, &x, p)?;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut warnings = Vec::new();
    let termination = loop {
        let (v, g) = descent(manifold, mu, &x, p)?;
        let mut r = row(trace.len(), Some(t), &x, e, g);
        r.predicted_rate = Some(-g * g);
        trace.push(r);
        if g <= opts.tol {
            break Termination::GradientTolerance;
        }
        if t >= opts.horizon - 1e-12 * opts.horizon.max(1.0) {
            break Termination::FlowHorizon;
        }
        if trace.len() > opts.max_steps {
            break Termination::MaxIterations;
        }
        let mut h = opts.dt.min(opts.horizon - t);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut step = &v * h;
            let mut end = manifold.exp_point(&x, &step)?;
            if p < 2.0 {
                if let Some(clipped) = clip_near_atoms(mu, &x, step.clone(), &end) {
                    step = clipped;
                    end = manifold.exp_point(&x, &step)?;
                }
            }
            let e_new = p_energy(manifold, mu, &end, p)?;
            if e_new <= e + FLOW_MONOTONE_TOL {
                accepted = Some((end, e_new));
                break;
            }
            h *= 0.5;
        }
        let Some((end, e_new)) = accepted else {
            warnings.push("no step size decreased the objective".into());
            break Termination::Stagnation;
        };
        if let Some(last) = trace.last_mut() {
            last.observed_rate = Some((e_new - e) / h);
        }
        x = end;
        e = e_new;
        t += h;
    };
    let last = trace.last().expect("trace has the start point");
    Ok(SolverReport {
        algorithm: "mean-flow".into(),
        p,
        final_point: x.iter().copied().collect(),
        final_objective: e,
        final_gradient_norm: last.gradient_norm,
        iterates: trace.len(),
        termination,
        step_constant: None,
        containment_radius: None,
        contained: None,
        start_condition: None,
        descent_checks: Vec::new(),
        warnings,
        trace,
    })
}

/// Discrete descent `x_{k+1} = exp_{x_k}(grad(−𝓔)/C_H)`.
///
/// Every step is checked against `𝓔(x_{k+1}) ≤ 𝓔(x_k) − F(grad)²/(2C_H)`; a
/// violation beyond [`DESCENT_SLACK`] means `C_H` does not majorize the Hessian
/// and is returned as [`FinslerError::InconsistentStepConstant`]. Iterates
/// leaving `B̄(x₀, C(C+1)R)` are flagged in the report.
pub fn mean_gradient_descent(
    manifold: &ChartedManifold,
    mu: &WeightedSampleMeasure,
    p: f64,
    x0: &Vector,
    bounds: &CurvatureBounds,
    opts: &DescentOptions,
) -> Result<SolverReport> {
    bounds.validate()?;
    if !p.is_finite() || p < 2.0 {
        return Err(FinslerError::Unsupported(format!(
            "discrete descent needs p >= 2 with an atomic measure (got p = {p}); the step majorant is unbounded near atoms, use the mean flow"
        )));
    }
    manifold.check_point(x0)?;
    let center = opts.ball_center.clone().unwrap_or_else(|| x0.clone());
    manifold.check_point(&center)?;
    let support = match opts.support_radius {
        Some(r) => r,
        None => MeanProblemBounds::support_radius_of(manifold, mu, &center)?,
    };
    let problem = MeanProblemBounds::new(p, *bounds, support, center.clone())?;
    let radius = existence_ball(bounds.c, problem.support_radius)?;
    let ch = match opts.step_constant {
        Some(c) if c > 0.0 && c.is_finite() => c,
        Some(c) => return Err(FinslerError::invalid(format!("step constant must be finite and > 0 (got {c})"))),
        None => step_constant_ch(manifold, mu, p, bounds, &center, radius, opts.seed)?,
    };

    let mut x = x0.clone();
    let mut e = p_energy(manifold, mu, &x, p)?;
    let start_condition = e <= problem.support_radius.powf(p);
    let mut contained = manifold.distance(&center, &x)? <= radius * (1.0 + 1e-9);
    let mut trace = Vec::new();
    let mut checks = Vec::new();
    let termination = loop {
        let (v, g) = descent(manifold, mu, &x, p)?;
        trace.push(row(trace.len(), None, &x, e, g));
        if g <= opts.tol {
            break Termination::GradientTolerance;
        }
        if checks.len() >= opts.max_iters {
            break Termination::MaxIterations;
        }
        let next = manifold.exp_point(&x, &(v / ch))?;
        let e_next = p_energy(manifold, mu, &next, p)?;
        let required = g * g / (2.0 * ch);
        let excess = e_next - (e - required);
        let iteration = checks.len();
        let satisfied = excess <= DESCENT_SLACK;
        checks.push(DescentCheck { iteration, before: e, after: e_next, required_decrease: required, excess, satisfied });
        if !satisfied {
            return Err(FinslerError::InconsistentStepConstant { iteration, excess });
        }
        if manifold.distance(&center, &next)? > radius * (1.0 + 1e-9) {
            contained = false;
        }
        x = next;
        e = e_next;
    };
    let mut warnings = Vec::new();
    if !start_condition {
        warnings.push("start point violates E(x0) <= R^p; containment is not guaranteed".into());
    }
    if !contained {
        warnings.push("an iterate left the existence ball".into());
    }
    let last = trace.last().expect("trace has the start point");
    Ok(SolverReport {
        algorithm: "mean-descent".into(),
        p,
        final_point: x.iter().copied().collect(),
        final_objective: e,
        final_gradient_norm: last.gradient_norm,
        iterates: trace.len(),
        termination,
        step_constant: Some(ch),
        containment_radius: Some(radius),
        contained: Some(contained),
        start_condition: Some(start_condition),
        descent_checks: checks,
        warnings,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::MinkowskiNorm;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn descent_finds_the_arithmetic_mean() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(2));
        let mu = WeightedSampleMeasure::uniform(vec![v(&[0.0, 0.0]), v(&[2.0, 0.0]), v(&[0.0, 2.0])]).unwrap();
        let rep = mean_gradient_descent(&m, &mu, 2.0, &v(&[1.5, -0.5]), &CurvatureBounds::default(), &DescentOptions::default()).unwrap();
        assert_eq!(rep.termination, Termination::GradientTolerance);
        assert!((rep.final_point_vector() - v(&[2.0 / 3.0, 2.0 / 3.0])).amax() < 1e-6);
        assert!((rep.step_constant.unwrap() - 2.5).abs() < 1e-12);
        assert!(rep.descent_checks.iter().all(|c| c.satisfied));
        assert_eq!(rep.contained, Some(true));
    }

    #[test]
    fn single_atom_is_reached_quickly() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(2));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![1.0, -2.0], 1.0)]).unwrap();
        let rep = mean_gradient_descent(&m, &mu, 2.0, &v(&[0.0, 0.0]), &CurvatureBounds::default(), &DescentOptions::default()).unwrap();
        assert!((rep.final_point_vector() - v(&[1.0, -2.0])).amax() < 1e-9);
        assert!(rep.iterates < 20);
    }

    #[test]
    fn descent_rejects_small_exponents() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(1));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![1.0], 1.0)]).unwrap();
        let err = mean_gradient_descent(&m, &mu, 1.5, &v(&[0.0]), &CurvatureBounds::default(), &DescentOptions::default());
        assert!(matches!(err, Err(FinslerError::Unsupported(_))));
    }

    #[test]
    fn too_small_step_constant_is_detected() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(1));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![1.0], 1.0)]).unwrap();
        let opts = DescentOptions { step_constant: Some(0.5), ..DescentOptions::default() };
        let err = mean_gradient_descent(&m, &mu, 2.0, &v(&[0.0]), &CurvatureBounds::default(), &opts);
        assert!(matches!(err, Err(FinslerError::InconsistentStepConstant { iteration: 0, .. })));
    }

    #[test]
    fn flow_converges_and_decreases() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(2));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![0.0, 0.0], 0.25), (vec![2.0, 0.0], 0.25), (vec![0.0, 2.0], 0.5)]).unwrap();
        let rep = mean_gradient_flow(&m, &mu, 2.0, &v(&[3.0, 3.0]), &FlowOptions::default()).unwrap();
        assert_eq!(rep.termination, Termination::GradientTolerance);
        assert!((rep.final_point_vector() - v(&[0.5, 1.0])).amax() < 1e-6);
        assert!(rep.max_objective_increase() <= FLOW_MONOTONE_TOL);
    }

    #[test]
    fn flow_stops_at_the_horizon() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(1));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![5.0], 1.0)]).unwrap();
        let opts = FlowOptions { horizon: 0.1, ..FlowOptions::default() };
        let rep = mean_gradient_flow(&m, &mu, 2.0, &v(&[0.0]), &opts).unwrap();
        assert_eq!(rep.termination, Termination::FlowHorizon);
        assert!((rep.trace.last().unwrap().time.unwrap() - 0.1).abs() < 1e-12);
    }
}
