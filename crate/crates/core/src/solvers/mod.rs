//! Center-point algorithms for weighted point sets.
//!
//! Per-atom terms are evaluated concurrently (with the `parallel` feature) and
//! reduced in atom-index order by pairwise summation, so results are
//! reproducible bit for bit. Iterate loops are sequential.

mod mean;
mod median;
mod objective;
mod report;

pub use crate::measure::{Atom, AtomSpec, MeasureSpec, WeightedSampleMeasure};
pub use mean::{
    mean_gradient_descent, mean_gradient_flow, DescentOptions, FlowOptions, ATOM_CLIP, DEFAULT_DT, DEFAULT_HORIZON,
    DEFAULT_MAX_ITERS, DEFAULT_TOL, DESCENT_SLACK, FLOW_MONOTONE_TOL,
};
pub use median::median_flow;
pub use objective::{
    atom_criterion, atom_local_min_test, descent_direction, energy_differential, median_differential, median_direction,
    p_energy, p_energy_gradient, ATOM_CRITERION_TOL,
};
pub use report::{DescentCheck, SolverReport, Termination, TraceRow};
