use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_dual::Dual64;
use rayon::prelude::*;

use crate::dimension::Dimension;
use crate::error::{LabError, Result};
use crate::geometry::ModelGeometry;
use crate::harmonics::{Basis, BoundaryField, Spectral};

/// Dense symmetric operator in the harmonic basis.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    pub n: Dimension,
    pub degree: usize,
    pub matrix: DMatrix<f64>,
}

impl SpectralOperator {
    pub fn diagonal(&self) -> DVector<f64> {
        self.matrix.diagonal()
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).abs().max()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = self.matrix.clone();
        m.fill_diagonal(0.0);
        m.abs().max()
    }

    pub fn apply(&self, v: &BoundaryField) -> Result<BoundaryField> {
        crate::harmonics::check_compatible("operator input", self.matrix.ncols(), v.len())?;
        Ok(v.with_coeffs(&self.matrix * &v.coeffs))
    }

    /// Writes the dense matrix as CSV, one row per line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for row in self.matrix.row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Dirichlet-to-Neumann matrix `Λ_ij = c_n ∫ Y_i ∂_r(E Y_j)`, assembled by quadrature.
///
/// `Λ` carries the factor `c_n` so that `⟨Λv, v⟩ = c_n ∫_B |∇Ev|²`. Conformal
/// geometries are handled by pulling fields back to the flat ball instead.
pub fn dtn_matrix(geom: &ModelGeometry, spectral: &Spectral) -> Result<SpectralOperator> {
    if !geom.is_flat() {
        return Err(LabError::NonFlatGeometry("dtn_matrix"));
    }
    if geom.n() != spectral.n() {
        return Err(LabError::InvalidArgument("geometry and basis dimensions differ".into()));
    }
    if spectral.grid().exact_degree < 2 * spectral.degree() {
        return Err(LabError::InvalidArgument(
            "DtN assembly needs a grid exact to degree 2L".into(),
        ));
    }
    let basis = spectral.basis();
    let grid = spectral.grid();
    let c_n = geom.n().c_n();
    // Radial derivatives of every solid harmonic at every node.
    let flux: Vec<Vec<f64>> = grid
        .nodes
        .par_chunks_exact(grid.n.get())
        .map(|x| {
            let pt: Vec<Dual64> = x.iter().map(|v| Dual64::new(*v, *v)).collect();
            basis.eval_solid(&pt).iter().map(|y| y.eps).collect()
        })
        .collect();
    let mut flux_mat = DMatrix::zeros(grid.len(), basis.len());
    for (q, row) in flux.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            flux_mat[(q, j)] = v * grid.weights[q] * c_n;
        }
    }
    let raw = spectral.values().tr_mul(&flux_mat);
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(SpectralOperator {
        n: geom.n(),
        degree: spectral.degree(),
        matrix,
    })
}

/// Closed-form flat-ball DtN eigenvalues `c_n l`, in basis order.
pub fn dtn_eigenvalues(basis: &Basis) -> DVector<f64> {
    let c_n = basis.dimension().c_n();
    DVector::from_iterator(basis.len(), basis.indices().iter().map(|ix| c_n * ix.l as f64))
}

/// `Σ (1 + l) v_i²` weights of the boundary H^{1/2} norm, in basis order.
pub fn h_half_weights(n: Dimension, degree: usize) -> DVector<f64> {
    let basis = Basis::new(n, degree);
    DVector::from_iterator(basis.len(), basis.indices().iter().map(|ix| 1.0 + ix.l as f64))
}

/// Boundary norm `‖v‖²_{H^{1/2}} = Σ (1 + l) v_i²`.
pub fn h_half_norm(v: &BoundaryField) -> f64 {
    let w = h_half_weights(v.n, v.degree);
    v.coeffs
        .iter()
        .zip(w.iter())
        .map(|(c, w)| w * c * c)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{conformal_ball, flat_ball};

    #[test]
    fn flat_entries() {
        let g = flat_ball(3).unwrap();
        let s = Spectral::for_degree(g.n(), 5);
        let op = dtn_matrix(&g, &s).unwrap();
        let d = op.diagonal();
        assert!(d[0].abs() < 1e-12);
        assert!((d[s.basis().position(1, 0).unwrap()] - 8.0).abs() < 1e-11);
        assert!((d[s.basis().position(5, 3).unwrap()] - 40.0).abs() < 1e-10);
        assert!(op.max_off_diagonal() < 1e-10);
        assert!(op.asymmetry() < 1e-12);
    }

    #[test]
    fn flat_entries_n4() {
        let g = flat_ball(4).unwrap();
        let s = Spectral::for_degree(g.n(), 4);
        let op = dtn_matrix(&g, &s).unwrap();
        let exact = dtn_eigenvalues(s.basis());
        assert!((op.diagonal() - exact).abs().max() < 1e-10);
        assert!(op.max_off_diagonal() < 1e-10);
    }

    #[test]
    fn conformal_request_is_redirected() {
        let n = Dimension::new(3).unwrap();
        let g = conformal_ball(3, BoundaryField::constant(n, 1, 2.0)).unwrap();
        let s = Spectral::for_degree(n, 2);
        assert!(matches!(dtn_matrix(&g, &s), Err(LabError::NonFlatGeometry(_))));
    }

    #[test]
    fn h_half_examples() {
        let n = Dimension::new(3).unwrap();
        let b = Basis::new(n, 2);
        assert!((h_half_norm(&BoundaryField::unit(n, 2, 0)) - 1.0).abs() < 1e-15);
        let i21 = b.position(2, 1).unwrap();
        assert!((h_half_norm(&BoundaryField::unit(n, 2, i21)).powi(2) - 3.0).abs() < 1e-14);
        let mut v = BoundaryField::unit(n, 2, 0);
        v.coeffs[b.position(2, 0).unwrap()] = 1.0;
        assert!((h_half_norm(&v).powi(2) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn csv_export() {
        let g = flat_ball(3).unwrap();
        let s = Spectral::for_degree(g.n(), 1);
        let op = dtn_matrix(&g, &s).unwrap();
        let dir = std::env::temp_dir().join(format!("dtn-{}.csv", std::process::id()));
        op.write_csv(&dir).unwrap();
        let text = std::fs::read_to_string(&dir).unwrap();
        assert_eq!(text.lines().count(), 4);
        std::fs::remove_file(dir).ok();
    }
}
