use serde::Serialize;

use crate::norms::Vector;

/// Why an iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    AtomCriterion,
    FlowHorizon,
    /// No step size, however small, decreased the objective.
    Stagnation,
}

/// One visited iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Flow time, for the continuous algorithms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    pub point: Vec<f64>,
    pub objective: f64,
    /// Dual norm of the (descent) differential at this iterate.
    pub gradient_norm: f64,
    /// Objective slope predicted by the flow equations at this iterate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_rate: Option<f64>,
    /// `(f(next) − f(this)) / step`, measured over the step leaving this iterate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_rate: Option<f64>,
}

/// Check of `𝓔(x_{k+1}) ≤ 𝓔(x_k) − F(grad)²/(2C_H)` for one discrete step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentCheck {
    pub iteration: usize,
    pub before: f64,
    pub after: f64,
    pub required_decrease: f64,
    /// `after − (before − required_decrease)`; at most the slack when satisfied.
    pub excess: f64,
    pub satisfied: bool,
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub algorithm: String,
    pub p: f64,
    pub final_point: Vec<f64>,
    pub final_objective: f64,
    pub final_gradient_norm: f64,
    /// Number of visited iterates, including the start; equals the trace length.
    pub iterates: usize,
    pub termination: Termination,
    #[serde(rename = "C_H", skip_serializing_if = "Option::is_none")]
    pub step_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub containment_radius: Option<f64>,
    /// Whether every iterate stayed in the existence ball.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contained: Option<bool>,
    /// Whether the start point satisfied `𝓔(x₀) ≤ R^p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_condition: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub descent_checks: Vec<DescentCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub trace: Vec<TraceRow>,
}

impl SolverReport {
    pub fn final_point_vector(&self) -> Vector {
        Vector::from_column_slice(&self.final_point)
    }

    /// Objective values along the trace.
    pub fn objectives(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.objective).collect()
    }

    /// Largest increase between consecutive trace objectives (≤ 0 for a monotone run).
    pub fn max_objective_increase(&self) -> f64 {
        self.trace.windows(2).map(|w| w[1].objective - w[0].objective).fold(f64::NEG_INFINITY, f64::max)
    }
}
