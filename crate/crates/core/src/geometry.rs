//! Model geometries on the unit ball: the flat metric and conformally flat
//! metrics `g_w = w^{4/(n-2)} δ` with `w` a positive harmonic polynomial.
//!
//! Harmonic `w` gives `R_g = -c_n w^{-(n+2)/(n-2)} Δw = 0`, so every geometry
//! here satisfies `R_g ≥ 0` by construction.

use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{LabError, Result};
use crate::harmonics::{BoundaryField, QuadratureGrid};
use crate::operators::{BallFunction, HarmonicExtension};

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryKind {
    FlatBall,
    /// Conformal factor given by the harmonic extension of its boundary data.
    ConformalBall { w: BoundaryField },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GeometryRepr", try_from = "GeometryRepr")]
pub struct ModelGeometry {
    n: Dimension,
    kind: GeometryKind,
}

#[derive(Serialize, Deserialize)]
struct GeometryRepr {
    n: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w_coeffs: Option<BoundaryField>,
}

impl From<ModelGeometry> for GeometryRepr {
    fn from(g: ModelGeometry) -> Self {
        match g.kind {
            GeometryKind::FlatBall => Self {
                n: g.n.get(),
                kind: "flat_ball".into(),
                w_coeffs: None,
            },
            GeometryKind::ConformalBall { w } => Self {
                n: g.n.get(),
                kind: "conformal_ball".into(),
                w_coeffs: Some(w),
            },
        }
    }
}

impl TryFrom<GeometryRepr> for ModelGeometry {
    type Error = LabError;

    fn try_from(r: GeometryRepr) -> Result<Self> {
        match (r.kind.as_str(), r.w_coeffs) {
            ("flat_ball", None) => flat_ball(r.n),
            ("conformal_ball", Some(w)) => conformal_ball(r.n, w),
            (kind, _) => Err(LabError::InvalidArgument(format!(
                "geometry kind {kind:?} requires w_coeffs exactly when conformal_ball"
            ))),
        }
    }
}

/// The Euclidean unit ball: `R_g ≡ 0`, `h_g ≡ 1`.
pub fn flat_ball(n: usize) -> Result<ModelGeometry> {
    Ok(ModelGeometry {
        n: Dimension::new(n)?,
        kind: GeometryKind::FlatBall,
    })
}

/// The ball with metric `w^{4/(n-2)} δ`, `w` the harmonic extension of the given data.
///
/// Positivity of `w` is checked on a dense boundary grid and on interior
/// shells; by the maximum principle the boundary check is the decisive one.
pub fn conformal_ball(n: usize, w: BoundaryField) -> Result<ModelGeometry> {
    let dim = Dimension::new(n)?;
    if w.n != dim {
        return Err(LabError::InvalidArgument(format!(
            "conformal factor lives on S^{} but the geometry is n = {n}",
            w.n.get() - 1
        )));
    }
    let ext = HarmonicExtension::new(&w);
    let grid = QuadratureGrid::new(dim, (6 * w.degree).max(48));
    for r in [1.0, 0.75, 0.5, 0.25, 0.0] {
        for x in grid.iter_nodes() {
            let y: Vec<f64> = x.iter().map(|c| r * c).collect();
            let value = ext.value(&y);
            if value <= 0.0 || !value.is_finite() {
                return Err(LabError::NonPositive {
                    what: "conformal factor w",
                    location: y,
                    value,
                });
            }
        }
    }
    Ok(ModelGeometry {
        n: dim,
        kind: GeometryKind::ConformalBall { w },
    })
}

impl ModelGeometry {
    pub fn n(&self) -> Dimension {
        self.n
    }

    pub fn kind(&self) -> &GeometryKind {
        &self.kind
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, GeometryKind::FlatBall)
    }

    pub fn conformal_factor(&self) -> Option<&BoundaryField> {
        match &self.kind {
            GeometryKind::FlatBall => None,
            GeometryKind::ConformalBall { w } => Some(w),
        }
    }

    /// Polynomial degree of the conformal factor (0 for the flat ball).
    pub fn factor_degree(&self) -> usize {
        self.conformal_factor().map_or(0, |w| w.degree)
    }

    /// `R_g ≥ 0` holds by construction for every geometry in this module.
    pub fn scalar_curvature_nonnegative(&self) -> bool {
        true
    }

    /// Conformal factor `w` and its radial derivative at boundary nodes.
    pub fn factor_on_boundary(&self, grid: &QuadratureGrid) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            GeometryKind::FlatBall => (vec![1.0; grid.len()], vec![0.0; grid.len()]),
            GeometryKind::ConformalBall { w } => {
                let ext = HarmonicExtension::new(w);
                grid.iter_nodes().map(|x| ext.value_and_radial(x)).unzip()
            }
        }
    }

    /// Boundary mean curvature `h_g = w^{-n/(n-2)} (2/(n-2) ∂_r w + w)` at the nodes.
    pub fn mean_curvature(&self, grid: &QuadratureGrid) -> Vec<f64> {
        let nf = self.n.get() as f64;
        let (w, dw) = self.factor_on_boundary(grid);
        w.iter()
            .zip(&dw)
            .map(|(w, dw)| w.powf(-nf / (nf - 2.0)) * (2.0 / (nf - 2.0) * dw + w))
            .collect()
    }

    /// Scalar curvature samples; identically zero for harmonic conformal factors.
    pub fn scalar_curvature(&self, grid: &QuadratureGrid) -> Vec<f64> {
        vec![0.0; grid.len()]
    }
}
