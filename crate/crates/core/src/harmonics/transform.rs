use nalgebra::{DMatrix, DVector};

use super::{check_compatible, Basis, BoundaryField, QuadratureGrid};
use crate::dimension::Dimension;
use crate::error::{LabError, Result};

/// A basis paired with a quadrature grid, with the basis tabulated at the nodes.
#[derive(Debug, Clone)]
pub struct Spectral {
    basis: Basis,
    grid: QuadratureGrid,
    /// `values[(q, i)] = Y_i(x_q)`.
    values: DMatrix<f64>,
}

impl Spectral {
    pub fn new(basis: Basis, grid: QuadratureGrid) -> Result<Self> {
        if basis.dimension() != grid.n {
            return Err(LabError::InvalidArgument(format!(
                "basis on S^{} paired with grid on S^{}",
                basis.dimension().get() - 1,
                grid.n.get() - 1
            )));
        }
        let mut values = DMatrix::zeros(grid.len(), basis.len());
        for (q, x) in grid.iter_nodes().enumerate() {
            for (i, y) in basis.eval(x).into_iter().enumerate() {
                values[(q, i)] = y;
            }
        }
        Ok(Self { basis, grid, values })
    }

    /// Basis of degree `degree` with a grid exact to `target_degree`.
    pub fn with_target(n: Dimension, degree: usize, target_degree: usize) -> Result<Self> {
        let grid = QuadratureGrid::with_target(n, degree, target_degree)?;
        Self::new(Basis::new(n, degree), grid)
    }

    /// Basis of degree `degree` on the default grid.
    pub fn for_degree(n: Dimension, degree: usize) -> Self {
        let grid = QuadratureGrid::for_degree(n, degree);
        Self::new(Basis::new(n, degree), grid).expect("matching dimensions")
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn n(&self) -> Dimension {
        self.basis.dimension()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.grid.len()
    }

    /// Tabulated basis values, one row per node.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.grid.weights
    }

    /// Nodal samples of a coefficient vector.
    pub fn synthesize_coeffs(&self, coeffs: &DVector<f64>) -> Vec<f64> {
        (&self.values * coeffs).as_slice().to_vec()
    }

    /// Quadrature projection of nodal samples onto the basis.
    pub fn analyze_samples(&self, samples: &[f64]) -> DVector<f64> {
        let weighted = DVector::from_iterator(
            samples.len(),
            samples.iter().zip(&self.grid.weights).map(|(f, w)| f * w),
        );
        self.values.tr_mul(&weighted)
    }

    pub fn synthesize(&self, field: &BoundaryField) -> Result<Vec<f64>> {
        check_compatible("field coefficients", self.len(), field.len())?;
        Ok(self.synthesize_coeffs(&field.coeffs))
    }

    pub fn analyze(&self, samples: &[f64]) -> Result<BoundaryField> {
        check_compatible("nodal samples", self.node_count(), samples.len())?;
        BoundaryField::new(self.n(), self.degree(), self.analyze_samples(samples))
    }

    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        check_compatible("nodal samples", self.node_count(), samples.len())?;
        Ok(self.grid.integrate(samples))
    }

    /// `∫ f Y_i Y_j` for nodal samples `f`.
    pub fn weighted_gram(&self, f: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.values.clone();
        for (q, mut row) in scaled.row_iter_mut().enumerate() {
            row *= f[q] * self.grid.weights[q];
        }
        self.values.tr_mul(&scaled)
    }
}

/// Builds a quadrature grid for degree-`degree` fields exact to `target_degree`.
pub fn quadrature_grid(n: usize, degree: usize, target_degree: usize) -> Result<QuadratureGrid> {
    QuadratureGrid::with_target(Dimension::new(n)?, degree, target_degree)
}

pub fn analyze(samples: &[f64], spectral: &Spectral) -> Result<BoundaryField> {
    spectral.analyze(samples)
}

pub fn synthesize(field: &BoundaryField, spectral: &Spectral) -> Result<Vec<f64>> {
    spectral.synthesize(field)
}

pub fn integrate_boundary(samples: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    check_compatible("nodal samples", grid.len(), samples.len())?;
    Ok(grid.integrate(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spectral(n: usize, degree: usize, target: usize) -> Spectral {
        Spectral::with_target(Dimension::new(n).unwrap(), degree, target).unwrap()
    }

    #[test]
    fn gram_is_identity() {
        for (n, degree, target) in [(3, 8, 32), (3, 16, 32), (4, 6, 12)] {
            let s = spectral(n, degree, target);
            let gram = s.weighted_gram(&vec![1.0; s.node_count()]);
            let dev = (gram - DMatrix::identity(s.len(), s.len())).abs().max();
            assert!(dev < 1e-12, "n = {n}, L = {degree}: {dev:e}");
        }
    }

    #[test]
    fn degree_one_integrates_to_zero() {
        let s = spectral(3, 1, 4);
        for i in 1..4 {
            let samples: Vec<f64> = s.values().column(i).iter().copied().collect();
            assert!(s.integrate(&samples).unwrap().abs() < 1e-13);
        }
        let ones = vec![1.0; s.node_count()];
        assert!((s.integrate(&ones).unwrap() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn analyze_products() {
        let s = spectral(3, 4, 16);
        let y10 = s.basis().position(1, 0).unwrap();
        let y20 = s.basis().position(2, 0).unwrap();
        let col = |i: usize| -> Vec<f64> { s.values().column(i).iter().copied().collect() };
        let c = s.analyze(&col(y20)).unwrap();
        for (i, v) in c.coeffs.iter().enumerate() {
            let expected = if i == y20 { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12);
        }
        let sq: Vec<f64> = col(y10).iter().map(|v| v * v).collect();
        let c = s.analyze(&sq).unwrap();
        for (i, v) in c.coeffs.iter().enumerate() {
            let l = s.basis().index(i).l;
            if l != 0 && l != 2 {
                assert!(v.abs() < 1e-13);
            }
        }
        assert!(c.coeffs[0].abs() > 0.1 && c.coeffs[y20].abs() > 0.1);
        assert!((s.integrate(&sq).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthesize_constant() {
        let s = spectral(3, 2, 8);
        let f = BoundaryField::unit(s.n(), 2, 0).scaled(1.7);
        for v in s.synthesize(&f).unwrap() {
            assert!((v - 1.7 / (4.0 * PI).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn size_mismatch_is_reported() {
        let s = spectral(3, 2, 8);
        assert!(s.analyze(&[1.0, 2.0]).is_err());
        let f = BoundaryField::zeros(s.n(), 3);
        assert!(s.synthesize(&f).is_err());
    }
}
