use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{LabError, Result};

/// Coefficients of a boundary function in the truncated harmonic basis.
///
/// Serializes as `{"n": .., "L": .., "coeffs": [..]}` in basis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FieldRepr", try_from = "FieldRepr")]
pub struct BoundaryField {
    pub n: Dimension,
    pub degree: usize,
    pub coeffs: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    n: usize,
    #[serde(rename = "L")]
    degree: usize,
    coeffs: Vec<f64>,
}

impl From<BoundaryField> for FieldRepr {
    fn from(f: BoundaryField) -> Self {
        Self {
            n: f.n.get(),
            degree: f.degree,
            coeffs: f.coeffs.as_slice().to_vec(),
        }
    }
}

impl TryFrom<FieldRepr> for BoundaryField {
    type Error = LabError;

    fn try_from(r: FieldRepr) -> Result<Self> {
        Self::new(Dimension::new(r.n)?, r.degree, DVector::from_vec(r.coeffs))
    }
}

impl BoundaryField {
    pub fn new(n: Dimension, degree: usize, coeffs: DVector<f64>) -> Result<Self> {
        let expected = n.basis_size(degree);
        if coeffs.len() != expected {
            return Err(LabError::SizeMismatch {
                what: "boundary field coefficients",
                expected,
                found: coeffs.len(),
            });
        }
        Ok(Self { n, degree, coeffs })
    }

    pub fn zeros(n: Dimension, degree: usize) -> Self {
        Self {
            n,
            degree,
            coeffs: DVector::zeros(n.basis_size(degree)),
        }
    }

    /// Field with a single unit coefficient at flat position `i`.
    pub fn unit(n: Dimension, degree: usize, i: usize) -> Self {
        let mut f = Self::zeros(n, degree);
        f.coeffs[i] = 1.0;
        f
    }

    /// Constant function with pointwise value `value`.
    pub fn constant(n: Dimension, degree: usize, value: f64) -> Self {
        let mut f = Self::zeros(n, degree);
        f.coeffs[0] = value * n.sphere_area().sqrt();
        f
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn with_coeffs(&self, coeffs: DVector<f64>) -> Self {
        Self {
            n: self.n,
            degree: self.degree,
            coeffs,
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.with_coeffs(&self.coeffs * t)
    }

    /// `self + t·other`.
    pub fn axpy(&self, t: f64, other: &BoundaryField) -> Self {
        self.with_coeffs(&self.coeffs + &other.coeffs * t)
    }

    /// L² inner product (the basis is orthonormal).
    pub fn dot(&self, other: &BoundaryField) -> f64 {
        self.coeffs.dot(&other.coeffs)
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Copy into a basis of another degree, truncating or zero-padding.
    pub fn resized(&self, degree: usize) -> Self {
        let size = self.n.basis_size(degree);
        let mut coeffs = DVector::zeros(size);
        let common = size.min(self.len());
        coeffs.rows_mut(0, common).copy_from(&self.coeffs.rows(0, common));
        Self {
            n: self.n,
            degree,
            coeffs,
        }
    }
}
