//! Geodesic spray coefficients, nonlinear connection and Chern Christoffel symbols.

use super::ChartedManifold;
use crate::error::{FinslerError, Result};
use crate::norms::{solve_spd, Matrix, Vector};

/// Relative step in `y` for `N^i_j = ∂G^i/∂y^j`.
const CONNECTION_STEP: f64 = 1e-4;

/// Christoffel symbols `Γ^k_ij`, stored as one `i × j` matrix per upper index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub symbols: Vec<Matrix>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.symbols[k][(i, j)]
    }

    /// `Γ^k_ij a^i b^j` for every `k`.
    pub fn contract(&self, a: &Vector, b: &Vector) -> Vector {
        Vector::from_iterator(self.symbols.len(), self.symbols.iter().map(|g| a.dot(&(g * b))))
    }

    /// `max |Γ^k_ij − Γ^k_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.symbols.iter().map(|g| (g - g.transpose()).amax()).fold(0.0, f64::max)
    }
}

fn inverse(g: &Matrix) -> Result<Matrix> {
    g.clone()
        .try_inverse()
        .ok_or_else(|| FinslerError::NumericalFailure { what: "fundamental tensor inversion".into(), residual: f64::NAN })
}

impl ChartedManifold {
    /// Spray coefficients without domain validation; zero at `y = 0`.
    pub(crate) fn spray_unchecked(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        if self.is_flat() || y.iter().all(|&c| c == 0.0) {
            return Ok(Vector::zeros(self.dim()));
        }
        match self.closed_form_spray(x, y) {
            Some(g) => g,
            None => self.spray_generic(x, y),
        }
    }

    /// `G^i = ¼ g^{ik}(2 ∂_l g_jk − ∂_k g_jl) y^j y^l` from the metric and its base-point derivatives.
    pub(crate) fn spray_generic(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        let n = self.dim();
        if self.is_flat() || y.iter().all(|&c| c == 0.0) {
            return Ok(Vector::zeros(n));
        }
        let g = self.metric_tensor_unchecked(x, y)?;
        let dg = self.metric_x_derivatives(x, y)?;
        // 2 ∂_l g_jk y^j y^l − ∂_k g_jl y^j y^l
        let mut rhs = Vector::zeros(n);
        for (l, dgl) in dg.iter().enumerate() {
            rhs += (dgl * y) * (2.0 * y[l]);
        }
        for (k, dgk) in dg.iter().enumerate() {
            rhs[k] -= y.dot(&(dgk * y));
        }
        let sol = solve_spd(&g, &rhs)
            .ok_or_else(|| FinslerError::NumericalFailure { what: "spray solve".into(), residual: f64::NAN })?;
        Ok(sol * 0.25)
    }

    /// Geodesic coefficients `G^i(x, y)`; geodesics solve `ẍ + 2G(x, ẋ) = 0`.
    pub fn geodesic_coefficients(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.check_point(x)?;
        if y.len() != self.dim() {
            return Err(FinslerError::invalid("vector dimension does not match the manifold"));
        }
        if y.iter().all(|&c| c == 0.0) {
            return Err(FinslerError::DegenerateReferenceVector);
        }
        self.spray_unchecked(x, y)
    }

    /// Nonlinear connection `N^i_j = ∂G^i/∂y^j` (row `i`, column `j`).
    pub fn nonlinear_connection(&self, x: &Vector, y: &Vector) -> Result<Matrix> {
        let n = self.dim();
        self.geodesic_coefficients(x, y)?;
        let mut out = Matrix::zeros(n, n);
        if self.is_flat() {
            return Ok(out);
        }
        let h = CONNECTION_STEP * y.amax();
        for j in 0..n {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += h;
            ym[j] -= h;
            let col = (self.spray_unchecked(x, &yp)? - self.spray_unchecked(x, &ym)?) / (2.0 * h);
            out.set_column(j, &col);
        }
        Ok(out)
    }

    /// Christoffel symbols of the Chern connection with reference vector `y`.
    pub fn chern_christoffel(&self, x: &Vector, y: &Vector) -> Result<Christoffel> {
        let n = self.dim();
        let nl = self.nonlinear_connection(x, y)?;
        if self.is_flat() {
            return Ok(Christoffel { symbols: vec![Matrix::zeros(n, n); n] });
        }
        let g = self.metric_tensor_unchecked(x, y)?;
        let ginv = inverse(&g)?;
        let dg = self.metric_x_derivatives(x, y)?;
        let cartan = self.cartan_unchecked(x, y)?;
        // δg_ij/δx^k = ∂_k g_ij − N^m_k ∂g_ij/∂y^m, with ∂g_ij/∂y^m = 2 C_ijm.
        let delta: Vec<Matrix> = (0..n)
            .map(|k| {
                Matrix::from_fn(n, n, |i, j| {
                    let vertical: f64 = (0..n).map(|m| nl[(m, k)] * 2.0 * cartan.get(i, j, m)).sum();
                    dg[k][(i, j)] - vertical
                })
            })
            .collect();
        let symbols = (0..n)
            .map(|k| {
                Matrix::from_fn(n, n, |i, j| {
                    0.5 * (0..n)
                        .map(|l| ginv[(k, l)] * (delta[i][(l, j)] + delta[j][(i, l)] - delta[l][(i, j)]))
                        .sum::<f64>()
                })
            })
            .collect();
        Ok(Christoffel { symbols })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::MinkowskiNorm;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn flat_spray_vanishes() {
        let m = ChartedManifold::flat(MinkowskiNorm::randers(Matrix::identity(2, 2), v(&[0.3, 0.1])).unwrap());
        let g = m.geodesic_coefficients(&v(&[1.0, 2.0]), &v(&[0.5, -1.0])).unwrap();
        assert_eq!(g, Vector::zeros(2));
        assert_eq!(
            m.geodesic_coefficients(&v(&[1.0, 2.0]), &v(&[0.0, 0.0])),
            Err(FinslerError::DegenerateReferenceVector)
        );
    }

    #[test]
    fn spray_is_two_homogeneous() {
        let m = ChartedManifold::poincare_disk();
        let x = v(&[0.2, 0.4]);
        let y = v(&[0.7, -0.3]);
        let g1 = m.geodesic_coefficients(&x, &y).unwrap();
        let g2 = m.geodesic_coefficients(&x, &(&y * 2.0)).unwrap();
        assert!((g2 - g1 * 4.0).amax() < 1e-12);
    }

    #[test]
    fn christoffel_contracts_to_twice_the_spray() {
        let m = ChartedManifold::affine_randers(
            Matrix::identity(2, 2),
            v(&[0.1, -0.05]),
            Matrix::from_row_slice(2, 2, &[0.1, 0.05, -0.03, 0.08]),
            super::super::ChartDomain::Box { lower: v(&[-2.0, -2.0]), upper: v(&[2.0, 2.0]) },
        )
        .unwrap();
        let x = v(&[0.3, -0.6]);
        let y = v(&[0.8, 0.4]);
        let gamma = m.chern_christoffel(&x, &y).unwrap();
        let spray = m.geodesic_coefficients(&x, &y).unwrap();
        let lhs = gamma.contract(&y, &y);
        assert!((lhs - spray * 2.0).amax() < 1e-6);
        assert!(gamma.asymmetry() <= 1e-10);
    }

    #[test]
    fn closed_form_sprays_match_the_generic_formula() {
        let ball = ChartedManifold::poincare_disk();
        let randers = ChartedManifold::affine_randers(
            Matrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.8]),
            v(&[0.1, -0.05]),
            Matrix::from_row_slice(2, 2, &[0.1, 0.05, -0.03, 0.08]),
            super::super::ChartDomain::Box { lower: v(&[-2.0, -2.0]), upper: v(&[2.0, 2.0]) },
        )
        .unwrap();
        for (x, y) in [(v(&[0.3, -0.6]), v(&[0.8, 0.4])), (v(&[-0.1, 0.2]), v(&[-0.3, -1.1]))] {
            for m in [&ball, &randers] {
                let closed = m.spray_unchecked(&x, &y).unwrap();
                let generic = m.spray_generic(&x, &y).unwrap();
                assert!((&closed - &generic).amax() < 1e-7 * generic.amax().max(1.0), "{closed} vs {generic}");
            }
        }
    }
}
