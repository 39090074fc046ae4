//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes and returns JSON strings. The `*_json` functions are
//! plain Rust so they can be tested natively; the `#[wasm_bindgen]` wrappers
//! only turn their errors into JS exceptions.

use finsler_core::geometry::{ChartedManifold, ManifoldSpec};
use finsler_core::measure::MeasureSpec;
use finsler_core::norms::Vector;
use finsler_core::solvers::{mean_gradient_flow, median_flow, FlowOptions, SolverReport};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

fn build(manifold: &str) -> Result<ChartedManifold, String> {
    let spec: ManifoldSpec = serde_json::from_str(manifold).map_err(|e| format!("manifold: {e}"))?;
    let m = spec.build().map_err(|e| e.to_string())?;
    if m.dim() != 2 {
        return Err("the demo draws surfaces only; use a 2-dimensional manifold".into());
    }
    Ok(m)
}

fn point(x: f64, y: f64) -> Vector {
    Vector::from_column_slice(&[x, y])
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Boundary of the unit ball `{v : F_x(v) ≤ 1}`, offset to sit at `x` and scaled by `scale`.
pub fn unit_ball_json(manifold: &str, x: f64, y: f64, samples: usize, scale: f64) -> Result<String, String> {
    let m = build(manifold)?;
    let norm = m.norm_at(&point(x, y)).map_err(|e| e.to_string())?;
    let samples = samples.clamp(8, 720);
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = std::f64::consts::TAU * i as f64 / samples as f64;
        let u = point(t.cos(), t.sin());
        let f = norm.norm(&u).map_err(|e| e.to_string())?;
        out.push([x + scale * u[0] / f, y + scale * u[1] / f]);
    }
    to_json(&out)
}

#[derive(Serialize)]
struct Ray {
    points: Vec<[f64; 2]>,
    /// Set when integration stopped early, e.g. at the chart boundary.
    stopped: Option<String>,
}

/// Unit-speed geodesics leaving `(x, y)` in `count` evenly spaced directions, up to `length`.
pub fn geodesic_fan_json(manifold: &str, x: f64, y: f64, count: usize, length: f64) -> Result<String, String> {
    let m = build(manifold)?;
    let start = point(x, y);
    let norm = m.norm_at(&start).map_err(|e| e.to_string())?;
    if !(length > 0.0 && length.is_finite()) {
        return Err("length must be positive".into());
    }
    let count = count.clamp(1, 72);
    let pieces = 24;
    let mut rays = Vec::with_capacity(count);
    for i in 0..count {
        let t = std::f64::consts::TAU * i as f64 / count as f64;
        let dir = point(t.cos(), t.sin());
        let mut v = &dir / norm.norm(&dir).map_err(|e| e.to_string())?;
        let mut at = start.clone();
        let mut ray = Ray { points: vec![[x, y]], stopped: None };
        // Integrate piecewise so a ray leaving the chart keeps its visible part.
        for _ in 0..pieces {
            match m.geodesic_flow(&at, &v, length / pieces as f64, 8) {
                Ok(sol) => {
                    at = sol.endpoint();
                    v = sol.end_velocity();
                    ray.points.push([at[0], at[1]]);
                }
                Err(e) => {
                    ray.stopped = Some(e.to_string());
                    break;
                }
            }
        }
        rays.push(ray);
    }
    to_json(&rays)
}

#[derive(Deserialize)]
struct CenterRequest {
    measure: MeasureSpec,
    /// `1` runs the median flow, anything larger the p-mean flow.
    p: f64,
    start: [f64; 2],
}

#[derive(Serialize)]
struct CenterResponse {
    point: Vec<f64>,
    objective: f64,
    termination: String,
    path: Vec<Vec<f64>>,
    warnings: Vec<String>,
}

/// Forward p-mean (or median for `p = 1`) of clicked points, with the flow path.
pub fn center_json(manifold: &str, request: &str) -> Result<String, String> {
    let m = build(manifold)?;
    let req: CenterRequest = serde_json::from_str(request).map_err(|e| format!("request: {e}"))?;
    let mu = req.measure.build().map_err(|e| e.to_string())?;
    let x0 = point(req.start[0], req.start[1]);
    let opts = FlowOptions { max_steps: 20_000, tol: 1e-7, ..FlowOptions::default() };
    let report: SolverReport = if req.p == 1.0 {
        median_flow(&m, &mu, &x0, &opts)
    } else {
        mean_gradient_flow(&m, &mu, req.p, &x0, &opts)
    }
    .map_err(|e| e.to_string())?;
    let termination = serde_json::to_value(report.termination).map_err(|e| e.to_string())?;
    let stride = (report.trace.len() / 400).max(1);
    let mut path: Vec<Vec<f64>> = report.trace.iter().step_by(stride).map(|r| r.point.clone()).collect();
    path.push(report.final_point.clone());
    to_json(&CenterResponse {
        point: report.final_point,
        objective: report.final_objective,
        termination: termination.as_str().unwrap_or_default().to_string(),
        path,
        warnings: report.warnings,
    })
}

#[wasm_bindgen]
pub fn unit_ball(manifold: &str, x: f64, y: f64, samples: usize, scale: f64) -> Result<String, JsError> {
    unit_ball_json(manifold, x, y, samples, scale).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn geodesic_fan(manifold: &str, x: f64, y: f64, count: usize, length: f64) -> Result<String, JsError> {
    geodesic_fan_json(manifold, x, y, count, length).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn center(manifold: &str, request: &str) -> Result<String, JsError> {
    center_json(manifold, request).map_err(|e| JsError::new(&e))
}
