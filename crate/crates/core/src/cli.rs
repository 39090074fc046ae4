//! The `finsler` command-line front end.
//!
//! Every subcommand reads one JSON problem file and prints one JSON document on
//! standard output. Exit status: 0 on success, 2 on input errors, 3 on numerical
//! failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{ball_grid, median_convexity_margin, step_constant_ch, InjectivityChecks, MeanProblemBounds};
use crate::error::FinslerError;
use crate::geometry::{ChartedManifold, CurvatureBounds, ManifoldSpec, DEFAULT_STEPS};
use crate::measure::{MeasureSpec, WeightedSampleMeasure};
use crate::norms::Vector;
use crate::sampling::{seed_from_env, unit_directions};
use crate::solvers::{
    mean_gradient_descent, mean_gradient_flow, median_flow, DescentOptions, FlowOptions, SolverReport, DEFAULT_DT,
    DEFAULT_HORIZON, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Grid points per axis for the region used by `C = "auto"` and the convexity margin.
const REGION_GRID: usize = 5;
/// Directions per atom for the second-variation summary.
const SECOND_VARIATION_DIRECTIONS: usize = 4;

#[derive(Debug, Parser)]
#[command(name = "finsler", version, about = "p-means and medians on Finsler manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the p-mean solver named in the problem file.
    Mean {
        file: PathBuf,
        /// Include the full iterate trace.
        #[arg(long)]
        trace: bool,
        /// Override the gradient tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the median flow.
    Median {
        file: PathBuf,
        #[arg(long)]
        trace: bool,
    },
    /// Forward and backward distance between two points.
    Distance {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
    },
    /// Sampled geodesic `t ↦ exp(t v)` on `[0, 1]`.
    Geodesic {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        velocity: String,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Radii, step constant, convexity margin and curvature-bound checks.
    Diagnose { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MeanDescent,
    MeanFlow,
    MedianFlow,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

/// A ratio constant given as a number or as `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatioConstant {
    Value(f64),
    #[serde(with = "auto_keyword")]
    Auto,
}

mod auto_keyword {
    use super::AutoKeyword;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        AutoKeyword::Auto.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        AutoKeyword::deserialize(d).map(|_| ())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub delta_prime: Option<f64>,
    #[serde(default, rename = "C")]
    pub c: Option<RatioConstant>,
    #[serde(default, rename = "D")]
    pub d: Option<RatioConstant>,
    #[serde(default)]
    pub inj: Option<f64>,
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    #[serde(default)]
    pub x0_ball: Option<Vec<f64>>,
}

/// A complete problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub manifold: ManifoldSpec,
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub bounds: Option<BoundsSection>,
}

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<FinslerError> for Failure {
    fn from(e: FinslerError) -> Self {
        let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `"1,-2.5"` or `"[1, -2.5]"`.
pub fn parse_coords(text: &str) -> std::result::Result<Vec<f64>, String> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| format!("bad coordinate list {text:?}: {e}"));
    }
    t.split(',')
        .map(|part| part.trim().parse::<f64>().map_err(|e| format!("bad coordinate {part:?} in {text:?}: {e}")))
        .collect()
}

fn coords(text: &str, dim: usize) -> CliResult<Vector> {
    let xs = parse_coords(text).map_err(input_error)?;
    if xs.len() != dim {
        return Err(input_error(format!("expected {dim} coordinates, got {}", xs.len())));
    }
    Ok(Vector::from_vec(xs))
}

pub fn load_problem(path: &Path) -> std::result::Result<ProblemFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid problem file {}: {e}", path.display()))
}

/// A problem file with its manifold and measure built.
struct Loaded {
    file: ProblemFile,
    manifold: ChartedManifold,
}

impl Loaded {
    fn open(path: &Path) -> CliResult<Self> {
        let file = load_problem(path).map_err(input_error)?;
        let manifold = file.manifold.build()?;
        Ok(Self { file, manifold })
    }

    fn measure(&self) -> CliResult<WeightedSampleMeasure> {
        let spec = self.file.measure.as_ref().ok_or_else(|| input_error("problem file has no measure"))?;
        let mu = spec.build()?;
        if mu.dim() != self.manifold.dim() {
            return Err(input_error("measure dimension does not match the manifold"));
        }
        for (i, a) in mu.atoms().iter().enumerate() {
            if !self.manifold.contains(&a.point) {
                return Err(input_error(format!("atom {i} lies outside the chart domain")));
            }
        }
        Ok(mu)
    }

    fn solver(&self) -> SolverSection {
        self.file.solver.clone().unwrap_or_default()
    }

    fn vector(&self, xs: &[f64], what: &str) -> CliResult<Vector> {
        if xs.len() != self.manifold.dim() {
            return Err(input_error(format!("{what} must have {} coordinates", self.manifold.dim())));
        }
        let x = Vector::from_column_slice(xs);
        if !self.manifold.contains(&x) {
            return Err(input_error(format!("{what} lies outside the chart domain")));
        }
        Ok(x)
    }

    /// `x0` from the solver section, else the weighted coordinate centroid of the atoms.
    fn start(&self, mu: &WeightedSampleMeasure) -> CliResult<Vector> {
        match &self.solver().x0 {
            Some(xs) => self.vector(xs, "x0"),
            None => {
                let mut c = Vector::zeros(mu.dim());
                for a in mu.atoms() {
                    c += &a.point * a.weight;
                }
                self.vector(c.as_slice(), "centroid start point")
            }
        }
    }
}

/// Resolved curvature bounds and support ball.
struct Resolved {
    bounds: CurvatureBounds,
    center: Vector,
    support_radius: f64,
    c_auto: bool,
    d_auto: bool,
}

fn resolve_bounds(loaded: &Loaded, mu: &WeightedSampleMeasure, x0: &Vector, seed: u64) -> CliResult<Resolved> {
    let section = loaded.file.bounds.clone().unwrap_or_default();
    let center = match &section.x0_ball {
        Some(xs) => loaded.vector(xs, "x0_ball")?,
        None => x0.clone(),
    };
    let support_radius = match section.r {
        Some(r) => r,
        None => MeanProblemBounds::support_radius_of(&loaded.manifold, mu, &center)?,
    };
    let c_given = match section.c {
        Some(RatioConstant::Value(c)) => Some(c),
        _ => None,
    };
    let d_given = match section.d {
        Some(RatioConstant::Value(d)) => Some(d),
        _ => None,
    };
    let (c, d) = if c_given.is_some() && d_given.is_some() {
        (c_given.unwrap_or(1.0), d_given.unwrap_or(1.0))
    } else {
        let mut region: Vec<Vector> = vec![center.clone(), x0.clone()];
        region.extend(mu.atoms().iter().map(|a| a.point.clone()));
        if !loaded.manifold.is_flat() {
            region.extend(ball_grid(&loaded.manifold, &center, support_radius, REGION_GRID, seed)?);
        }
        let (c_auto, d_auto) = loaded.manifold.norm_ratio_constants(&region, seed)?;
        (c_given.unwrap_or(c_auto), d_given.unwrap_or(d_auto))
    };
    let bounds = CurvatureBounds {
        k: section.k.unwrap_or(0.0),
        beta: section.beta.unwrap_or(0.0),
        delta: section.delta.unwrap_or(0.0),
        delta_prime: section.delta_prime.unwrap_or(0.0),
        c,
        d,
        inj: section.inj.unwrap_or(f64::INFINITY),
    };
    bounds.validate()?;
    Ok(Resolved { bounds, center, support_radius, c_auto: c_given.is_none(), d_auto: d_given.is_none() })
}

fn flow_options(s: &SolverSection, tol: Option<f64>) -> FlowOptions {
    FlowOptions {
        dt: s.dt.unwrap_or(DEFAULT_DT),
        horizon: s.horizon.unwrap_or(DEFAULT_HORIZON),
        tol: tol.or(s.tol).unwrap_or(DEFAULT_TOL),
        max_steps: s.max_iters.unwrap_or(FlowOptions::default().max_steps),
    }
}

/// Serializes a report; without `--trace` the per-iterate rows are dropped and
/// the descent checks are condensed to a summary.
fn finalize(mut report: SolverReport, trace: bool) -> Value {
    let checks = std::mem::take(&mut report.descent_checks);
    if !trace {
        report.trace.clear();
    }
    let mut v = serde_json::to_value(&report).expect("report serializes");
    if let Value::Object(map) = &mut v {
        if !trace {
            map.remove("trace");
        }
        if !checks.is_empty() {
            let value = if trace {
                serde_json::to_value(&checks).expect("checks serialize")
            } else {
                json!({
                    "count": checks.len(),
                    "all_satisfied": checks.iter().all(|c| c.satisfied),
                    "max_excess": checks.iter().map(|c| c.excess).fold(f64::NEG_INFINITY, f64::max),
                })
            };
            map.insert("descent_checks".into(), value);
        }
    }
    v
}

fn cmd_mean(path: &Path, trace: bool, tol: Option<f64>) -> CliResult<Value> {
    let loaded = Loaded::open(path)?;
    let mu = loaded.measure()?;
    let s = loaded.solver();
    let p = s.p.unwrap_or(2.0);
    let x0 = loaded.start(&mu)?;
    let algorithm = s.algorithm.unwrap_or(if p >= 2.0 { Algorithm::MeanDescent } else { Algorithm::MeanFlow });
    let report = match algorithm {
        Algorithm::MedianFlow => return Err(input_error("algorithm \"median-flow\" belongs to the median subcommand")),
        Algorithm::MeanFlow => mean_gradient_flow(&loaded.manifold, &mu, p, &x0, &flow_options(&s, tol))?,
        Algorithm::MeanDescent => {
            let seed = seed_from_env();
            let resolved = resolve_bounds(&loaded, &mu, &x0, seed)?;
            let opts = DescentOptions {
                tol: tol.or(s.tol).unwrap_or(DEFAULT_TOL),
                max_iters: s.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
                step_constant: None,
                ball_center: Some(resolved.center),
                support_radius: Some(resolved.support_radius),
                seed,
            };
            mean_gradient_descent(&loaded.manifold, &mu, p, &x0, &resolved.bounds, &opts)?
        }
    };
    Ok(finalize(report, trace))
}

fn cmd_median(path: &Path, trace: bool) -> CliResult<Value> {
    let loaded = Loaded::open(path)?;
    let mu = loaded.measure()?;
    let s = loaded.solver();
    match s.algorithm {
        None | Some(Algorithm::MedianFlow) => {}
        Some(_) => return Err(input_error("the median subcommand runs \"median-flow\" only")),
    }
    if let Some(p) = s.p {
        if p != 1.0 {
            return Err(input_error(format!("median-flow uses p = 1 (file says p = {p})")));
        }
    }
    let x0 = loaded.start(&mu)?;
    let report = median_flow(&loaded.manifold, &mu, &x0, &flow_options(&s, None))?;
    Ok(finalize(report, trace))
}

fn cmd_distance(path: &Path, from: &str, to: &str) -> CliResult<Value> {
    let loaded = Loaded::open(path)?;
    let n = loaded.manifold.dim();
    let x = coords(from, n)?;
    let y = coords(to, n)?;
    let forward = loaded.manifold.distance(&x, &y)?;
    let backward = loaded.manifold.distance(&y, &x)?;
    Ok(json!({ "forward": forward, "backward": backward }))
}

fn cmd_geodesic(path: &Path, from: &str, velocity: &str, steps: Option<usize>) -> CliResult<Value> {
    let loaded = Loaded::open(path)?;
    let n = loaded.manifold.dim();
    let x = coords(from, n)?;
    let v = coords(velocity, n)?;
    let steps = steps.unwrap_or(DEFAULT_STEPS);
    if steps == 0 {
        return Err(input_error("--steps must be positive"));
    }
    let sol = loaded.manifold.exp_map(&x, &v, steps)?;
    let speeds = sol.speeds(&loaded.manifold)?;
    let mut out = serde_json::to_value(&sol).expect("geodesic serializes");
    if let Value::Object(map) = &mut out {
        map.insert("speeds".into(), json!(speeds));
    }
    Ok(out)
}

/// `null` for non-finite numbers, which JSON cannot carry.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

#[derive(Serialize)]
struct SecondVariationSummary {
    samples: usize,
    within: usize,
    all_within: bool,
    /// Largest distance outside `[lower − tol, upper + tol]`; zero when all are inside.
    max_violation: f64,
    skipped: usize,
}

fn second_variation_summary(
    manifold: &ChartedManifold,
    mu: &WeightedSampleMeasure,
    x: &Vector,
    p: f64,
    bounds: &CurvatureBounds,
    seed: u64,
) -> std::result::Result<SecondVariationSummary, FinslerError> {
    let dirs = unit_directions(manifold.dim(), SECOND_VARIATION_DIRECTIONS, seed);
    let mut summary = SecondVariationSummary { samples: 0, within: 0, all_within: true, max_violation: 0.0, skipped: 0 };
    // A p = 1 problem is checked with the p = 2 bounds, where both sides are finite.
    let p = if p > 1.0 { p } else { 2.0 };
    for atom in mu.atoms() {
        if (&atom.point - x).amax() == 0.0 {
            continue;
        }
        for d in &dirs {
            match manifold.second_variation_diag(x, &atom.point, d, p, bounds) {
                Ok(r) => {
                    summary.samples += 1;
                    if r.within {
                        summary.within += 1;
                    } else {
                        summary.all_within = false;
                        let v = (r.lower - r.tolerance - r.numeric).max(r.numeric - r.upper - r.tolerance);
                        summary.max_violation = summary.max_violation.max(v);
                    }
                }
                Err(FinslerError::OutOfComparisonRange { .. }) => summary.skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(summary)
}

fn cmd_diagnose(path: &Path) -> CliResult<Value> {
    let loaded = Loaded::open(path)?;
    let mu = loaded.measure()?;
    let s = loaded.solver();
    let algorithm = s.algorithm.unwrap_or(Algorithm::MeanDescent);
    let p = match algorithm {
        Algorithm::MedianFlow => 1.0,
        _ => s.p.unwrap_or(2.0),
    };
    if !(p >= 1.0) || !p.is_finite() {
        return Err(input_error(format!("p must be >= 1 (got {p})")));
    }
    let x0 = loaded.start(&mu)?;
    let seed = seed_from_env();
    let resolved = resolve_bounds(&loaded, &mu, &x0, seed)?;
    let b = resolved.bounds;
    let problem = MeanProblemBounds::new(p, b, resolved.support_radius, resolved.center.clone())?;
    let r_unique = problem.uniqueness_radius()?;
    let existence_radius = problem.existence_radius()?;
    let support_condition = problem.support_condition()?;
    let injectivity: InjectivityChecks = problem.injectivity()?;
    let mut notes: Vec<String> = Vec::new();

    let c_h = if p >= 2.0 {
        match step_constant_ch(&loaded.manifold, &mu, p, &b, &resolved.center, existence_radius, seed) {
            Ok(v) => num(v),
            Err(e @ (FinslerError::DomainEscape { .. } | FinslerError::NumericalFailure { .. })) => {
                notes.push(format!("C_H unavailable: {e}"));
                Value::Null
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        notes.push("C_H is only defined for p >= 2 with an atomic measure".into());
        Value::Null
    };

    let eta = match ball_grid(&loaded.manifold, &resolved.center, existence_radius, REGION_GRID, seed)
        .and_then(|region| median_convexity_margin(&loaded.manifold, &mu, &region, b.k, b.delta, seed))
    {
        Ok(v) => num(v),
        Err(e @ (FinslerError::OutOfComparisonRange { .. } | FinslerError::DomainEscape { .. } | FinslerError::NumericalFailure { .. })) => {
            notes.push(format!("convexity margin unavailable: {e}"));
            Value::Null
        }
        Err(e) => return Err(e.into()),
    };

    let second_variation = match second_variation_summary(&loaded.manifold, &mu, &resolved.center, p, &b, seed) {
        Ok(s) => serde_json::to_value(s).expect("summary serializes"),
        Err(e) if !e.is_input_error() => {
            notes.push(format!("second-variation check unavailable: {e}"));
            Value::Null
        }
        Err(e) => return Err(e.into()),
    };

    Ok(json!({
        "p": p,
        "bounds": {
            "k": b.k,
            "beta": b.beta,
            "delta": b.delta,
            "delta_prime": b.delta_prime,
            "C": b.c,
            "D": b.d,
            "C_auto": resolved.c_auto,
            "D_auto": resolved.d_auto,
            "inj": num(b.inj),
        },
        "x0_ball": resolved.center.as_slice(),
        "R": resolved.support_radius,
        "R_unique": num(r_unique),
        "existence_radius": existence_radius,
        "C_H": c_h,
        "eta_minus_delta": eta,
        "support_condition_eq51": support_condition,
        "injectivity": injectivity,
        "second_variation": second_variation,
        "seed": seed,
        "notes": notes,
    }))
}

fn dispatch(cli: Cli) -> CliResult<Value> {
    match cli.command {
        Command::Mean { file, trace, tol } => cmd_mean(&file, trace, tol),
        Command::Median { file, trace } => cmd_median(&file, trace),
        Command::Distance { file, from, to } => cmd_distance(&file, &from, &to),
        Command::Geodesic { file, from, velocity, steps } => cmd_geodesic(&file, &from, &velocity, steps),
        Command::Diagnose { file } => cmd_diagnose(&file),
    }
}

/// Runs the CLI with explicit output streams and returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_INPUT
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("JSON output serializes");
            let _ = writeln!(out, "{text}");
            EXIT_OK
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Runs the CLI on the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
