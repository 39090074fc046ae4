//! Forward p-means and medians of weighted point sets on Finsler manifolds.
//!
//! The crate is layered bottom-up:
//!
//! - [`norms`]: Minkowski norms, fundamental and Cartan tensors, Legendre map, dual norm.
//! - [`geometry`]: charted manifolds, spray, Chern connection, geodesics, tangent curvature.
//! - [`bounds`]: uniqueness and existence radii, Hessian bounds, step constants, convexity margin.
//! - [`solvers`]: p-energy, mean flow and discrete descent, median flow.
//! - [`cli`] (feature `cli`): the `finsler` command-line front end.
//!
//! ```
//! use finsler_core::geometry::ChartedManifold;
//! use finsler_core::norms::{Matrix, MinkowskiNorm, Vector};
//!
//! let norm = MinkowskiNorm::randers(Matrix::identity(1, 1), Vector::from_element(1, 0.5)).unwrap();
//! let line = ChartedManifold::flat(norm);
//! let (a, b) = (Vector::from_element(1, 0.0), Vector::from_element(1, 1.0));
//! assert!((line.distance(&a, &b).unwrap() - 1.5).abs() < 1e-12);
//! assert!((line.distance(&b, &a).unwrap() - 0.5).abs() < 1e-12);
//! ```

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod norms;
pub mod ode;
mod par;
pub mod sampling;
pub mod solvers;

pub use error::{FinslerError, Result};
