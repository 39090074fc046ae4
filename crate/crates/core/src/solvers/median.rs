//! Median flow `ẋ = −H(x)` with the atom stopping criterion.

use super::mean::{FlowOptions, FLOW_MONOTONE_TOL};
use super::objective::{atom_local_min_test, median_differential, p_energy, ATOM_CRITERION_TOL};
use super::report::{SolverReport, Termination, TraceRow};
use crate::error::Result;
use crate::geometry::ChartedManifold;
use crate::measure::{WeightedSampleMeasure, ATOM_COINCIDENCE};
use crate::norms::{Matrix, Vector};

const MAX_HALVINGS: usize = 40;

/// Whether all atoms lie on one coordinate line (only meaningful on flat manifolds,
/// where lines are geodesics).
fn support_is_collinear(mu: &WeightedSampleMeasure) -> bool {
    let atoms = mu.atoms();
    let base = &atoms[0].point;
    let n = mu.dim();
    let chords: Vec<Vector> = atoms[1..].iter().map(|a| &a.point - base).collect();
    if chords.is_empty() || n == 1 {
        return true;
    }
    let scale = chords.iter().map(|c| c.amax()).fold(0.0, f64::max);
    if scale == 0.0 {
        return true;
    }
    let m = Matrix::from_columns(&chords) / scale;
    m.svd(false, false).singular_values.iter().filter(|&&s| s > 1e-10).count() <= 1
}

/// Explicit-step median flow from `x0`.
///
/// Stops when the current point is an atom satisfying `μ({x}) ≥ F*(d𝓕_{μ_x})`,
/// or a non-atom with `F*(d𝓕_μ) ≤ tol`. Steps that land next to an atom
/// satisfying the criterion with no larger objective snap onto that atom;
/// steps that raise the objective are halved.
pub fn median_flow(manifold: &ChartedManifold, mu: &WeightedSampleMeasure, x0: &Vector, opts: &FlowOptions) -> Result<SolverReport> {
    manifold.check_point(x0)?;
    let mut warnings = Vec::new();
    if manifold.is_flat() && mu.len() > 1 && support_is_collinear(mu) {
        warnings.push("support lies on a single geodesic; the median may not be unique".into());
    }
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut f = p_energy(manifold, mu, &x, 1.0)?;
    let mut trace: Vec<TraceRow> = Vec::new();
    let termination = loop {
        let norm = manifold.norm_at(&x)?;
        let xi = median_differential(manifold, mu, &x)?.components;
        let h_vec = norm.legendre_inverse(&xi)?;
        let dual = norm.norm(&h_vec)?;
        let mass = mu.mass_at(&x);
        trace.push(TraceRow {
            iteration: trace.len(),
            time: Some(t),
            point: x.iter().copied().collect(),
            objective: f,
            gradient_norm: dual,
            predicted_rate: (mass < dual).then(|| -dual * (dual - mass)),
            observed_rate: None,
        });
        if mass > 0.0 && mass >= dual - ATOM_CRITERION_TOL {
            break Termination::AtomCriterion;
        }
        if mass == 0.0 && dual <= opts.tol {
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
            let step = &h_vec * -h;
            let mut end = manifold.exp_point(&x, &step)?;
            let mut f_end = p_energy(manifold, mu, &end, 1.0)?;
            let reach = 1.5 * (&end - &x).amax();
            for atom in mu.atoms() {
                let z = &atom.point;
                if (z - &x).amax() <= ATOM_COINCIDENCE || (z - &end).amax() > reach {
                    continue;
                }
                let fz = p_energy(manifold, mu, z, 1.0)?;
                if fz <= f_end && atom_local_min_test(manifold, mu, z)? {
                    end = z.clone();
                    f_end = fz;
                    break;
                }
            }
            if f_end <= f + FLOW_MONOTONE_TOL {
                accepted = Some((end, f_end));
                break;
            }
            h *= 0.5;
        }
        let Some((end, f_end)) = accepted else {
            warnings.push("no step size decreased the objective".into());
            break Termination::Stagnation;
        };
        if let Some(last) = trace.last_mut() {
            last.observed_rate = Some((f_end - f) / h);
        }
        x = end;
        f = f_end;
        t += h;
    };
    let last = trace.last().expect("trace has the start point");
    Ok(SolverReport {
        algorithm: "median-flow".into(),
        p: 1.0,
        final_point: x.iter().copied().collect(),
        final_objective: f,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::MinkowskiNorm;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn heavy_atom_stops_the_flow() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(1));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![0.0], 0.8), (vec![1.0], 0.2)]).unwrap();
        let rep = median_flow(&m, &mu, &v(&[0.7]), &FlowOptions::default()).unwrap();
        assert_eq!(rep.termination, Termination::AtomCriterion);
        assert_eq!(rep.final_point, vec![0.0]);
        assert!(rep.max_objective_increase() <= 0.0);
    }

    #[test]
    fn single_atom_median() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(2));
        let mu = WeightedSampleMeasure::from_pairs(&[(vec![0.3, -0.2], 1.0)]).unwrap();
        let rep = median_flow(&m, &mu, &v(&[1.0, 1.0]), &FlowOptions::default()).unwrap();
        assert_eq!(rep.termination, Termination::AtomCriterion);
        assert_eq!(rep.final_point, vec![0.3, -0.2]);
    }

    #[test]
    fn collinear_support_is_flagged() {
        let m = ChartedManifold::flat(MinkowskiNorm::identity(2));
        let mu = WeightedSampleMeasure::uniform(vec![v(&[0.0, 0.0]), v(&[1.0, 1.0]), v(&[3.0, 3.0])]).unwrap();
        let rep = median_flow(&m, &mu, &v(&[2.0, 0.0]), &FlowOptions::default()).unwrap();
        assert!(!rep.warnings.is_empty());
        // The middle atom is the median of three collinear equal weights.
        assert_eq!(rep.final_point, vec![1.0, 1.0]);
    }
}
