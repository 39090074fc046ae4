use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::norms::Vector;

/// Tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-12;

/// Coordinates closer than this (max-norm) are treated as the same atom location.
pub const ATOM_COINCIDENCE: f64 = 1e-12;

/// A point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: Vector,
    pub weight: f64,
}

/// Finite probability measure `Σ wᵢ δ_{zᵢ}` with strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSampleMeasure {
    atoms: Vec<Atom>,
}

impl WeightedSampleMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(FinslerError::invalid("measure needs at least one atom"));
        }
        let dim = atoms[0].point.len();
        if dim == 0 {
            return Err(FinslerError::invalid("atom points must be nonempty"));
        }
        let mut total = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if a.point.len() != dim {
                return Err(FinslerError::invalid(format!("atom {i} has dimension {}, expected {dim}", a.point.len())));
            }
            if a.point.iter().any(|c| !c.is_finite()) {
                return Err(FinslerError::invalid(format!("atom {i} has non-finite coordinates")));
            }
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(FinslerError::invalid(format!("atom {i} has non-positive weight {}", a.weight)));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(FinslerError::invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { atoms })
    }

    /// Equal weights on the given points.
    pub fn uniform(points: Vec<Vector>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(FinslerError::invalid("measure needs at least one atom"));
        }
        // Last weight absorbs rounding so the mass is 1 to within an ulp or two.
        let w = 1.0 / n as f64;
        let mut atoms: Vec<Atom> = points.into_iter().map(|point| Atom { point, weight: w }).collect();
        let rest: f64 = atoms[..n - 1].iter().map(|a| a.weight).sum();
        atoms[n - 1].weight = 1.0 - rest;
        Self::new(atoms)
    }

    pub fn from_pairs(pairs: &[(Vec<f64>, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(p, w)| Atom { point: Vector::from_column_slice(p), weight: *w })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].point.len()
    }

    /// `μ({x})`.
    pub fn mass_at(&self, x: &Vector) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (&a.point - x).amax() <= ATOM_COINCIDENCE)
            .map(|a| a.weight)
            .sum()
    }

    /// Whether `x` carries positive mass.
    pub fn is_atom(&self, x: &Vector) -> bool {
        self.mass_at(x) > 0.0
    }

    /// Same atoms with every weight replaced; used to check linearity in the weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.atoms.len() {
            return Err(FinslerError::invalid("weight count mismatch"));
        }
        Self::new(
            self.atoms
                .iter()
                .zip(weights)
                .map(|(a, &weight)| Atom { point: a.point.clone(), weight })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub point: Vec<f64>,
    pub weight: f64,
}

/// JSON form: `{"atoms":[{"point":[...],"weight":0.25}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub atoms: Vec<AtomSpec>,
}

impl MeasureSpec {
    pub fn build(&self) -> Result<WeightedSampleMeasure> {
        WeightedSampleMeasure::new(
            self.atoms
                .iter()
                .map(|a| Atom { point: Vector::from_column_slice(&a.point), weight: a.weight })
                .collect(),
        )
    }
}

impl From<&WeightedSampleMeasure> for MeasureSpec {
    fn from(m: &WeightedSampleMeasure) -> Self {
        Self {
            atoms: m
                .atoms
                .iter()
                .map(|a| AtomSpec { point: a.point.iter().copied().collect(), weight: a.weight })
                .collect(),
        }
    }
}
