use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::functional::{BoundaryFunctional, ConstraintState, Functional};

use super::kernel;

/// Polynomial planted on the kernel coordinates of a critical point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantedForm {
    /// `σ (d·x)^order` with `d` a unit vector.
    Power { sigma: f64, direction: Vec<f64>, order: u32 },
    /// `σ |x|⁴`.
    RadialQuartic { sigma: f64 },
    /// `σ |x|²`; lifts the kernel for `σ > 0`.
    Quadratic { sigma: f64 },
}

impl PlantedForm {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PlantedForm::Power { sigma, direction, order } => sigma * dot(direction, x).powi(*order as i32),
            PlantedForm::RadialQuartic { sigma } => sigma * dot(x, x).powi(2),
            PlantedForm::Quadratic { sigma } => sigma * dot(x, x),
        }
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let l = x.len();
        match self {
            PlantedForm::Power { sigma, direction, order } => {
                let k = *order as i32;
                let f = sigma * k as f64 * dot(direction, x).powi(k - 1);
                DVector::from_iterator(l, direction.iter().map(|d| f * d))
            }
            PlantedForm::RadialQuartic { sigma } => {
                let r2 = dot(x, x);
                DVector::from_iterator(l, x.iter().map(|v| 4.0 * sigma * r2 * v))
            }
            PlantedForm::Quadratic { sigma } => DVector::from_iterator(l, x.iter().map(|v| 2.0 * sigma * v)),
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let l = x.len();
        match self {
            PlantedForm::Power { sigma, direction, order } => {
                let k = *order as i32;
                let f = if k >= 2 {
                    sigma * (k * (k - 1)) as f64 * dot(direction, x).powi(k - 2)
                } else {
                    0.0
                };
                DMatrix::from_fn(l, l, |i, j| f * direction[i] * direction[j])
            }
            PlantedForm::RadialQuartic { sigma } => {
                let r2 = dot(x, x);
                DMatrix::from_fn(l, l, |i, j| {
                    4.0 * sigma * (if i == j { r2 } else { 0.0 } + 2.0 * x[i] * x[j])
                })
            }
            PlantedForm::Quadratic { sigma } => DMatrix::identity(l, l) * (2.0 * sigma),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// `Q̃(v) + P(κ(v))` with 0-homogeneous kernel coordinates `κ_j(v) = ⟨k_j, v⟩ (∫ v^p)^{-1/p}`.
///
/// The kernel `k_j` is taken at a critical point of the base quotient, so that
/// point stays critical and, along the reduced variety, `q(a) − q(0) ≈ P(a)`.
#[derive(Debug, Clone)]
pub struct PlantedFunctional {
    base: Functional,
    kernel: DMatrix<f64>,
    form: PlantedForm,
}

impl PlantedFunctional {
    pub fn new(base: Functional, state: &ConstraintState, form: PlantedForm) -> Result<Self> {
        let k = kernel(&base, state)?;
        if let PlantedForm::Power { direction, .. } = &form {
            if direction.len() != k.dim() {
                return Err(LabError::SizeMismatch {
                    what: "planted direction",
                    expected: k.dim(),
                    found: direction.len(),
                });
            }
        }
        Ok(Self {
            base,
            kernel: k.matrix,
            form,
        })
    }

    pub fn form(&self) -> &PlantedForm {
        &self.form
    }

    pub fn kernel_matrix(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// Kernel coordinates `κ(c)`.
    pub fn coordinates(&self, c: &DVector<f64>) -> Vec<f64> {
        let mu = self.base.p_mass_coeffs(c).powf(-1.0 / self.base.p());
        (self.kernel.tr_mul(c) * mu).iter().copied().collect()
    }
}

impl BoundaryFunctional for PlantedFunctional {
    fn base(&self) -> &Functional {
        &self.base
    }

    fn value(&self, c: &DVector<f64>) -> Result<f64> {
        Ok(self.base.eval_qtilde_coeffs(c)? + self.form.value(&self.coordinates(c)))
    }

    fn gradient(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let mo = self.base.moments(c)?;
        let mu = mo.mass.powf(-1.0 / self.base.p());
        let r = self.kernel.tr_mul(c);
        let x: Vec<f64> = (&r * mu).iter().copied().collect();
        // ∇κ = μ (K − s rᵀ/m)
        let jac = (&self.kernel - &mo.s * r.transpose() / mo.mass) * mu;
        Ok(self.base.euclidean_gradient(c)? + jac * self.form.gradient(&x))
    }

    fn hessian(&self, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mo = self.base.moments(c)?;
        let p = self.base.p();
        let m = mo.mass;
        let mu = m.powf(-1.0 / p);
        let r = self.kernel.tr_mul(c);
        let x: Vec<f64> = (&r * mu).iter().copied().collect();
        let jac = (&self.kernel - &mo.s * r.transpose() / m) * mu;
        let g = self.form.gradient(&x);
        let mut h = self.base.euclidean_hessian(c)? + &jac * self.form.hessian(&x) * jac.transpose();
        // Σ_j ∂_jP ∇²κ_j, with
        // ∇²κ_j = −(μ/m)(k_j sᵀ + s k_jᵀ) + (1+p) r_j μ/m² s sᵀ − (p−1) r_j μ/m W.
        let kg = &self.kernel * &g;
        let rg = r.dot(&g);
        let cross = &kg * mo.s.transpose();
        h -= (&cross + cross.transpose()) * (mu / m);
        h += &mo.s * mo.s.transpose() * ((1.0 + p) * rg * mu / (m * m));
        if rg != 0.0 {
            h -= self.base.weight_matrix(&mo.samples) * ((p - 1.0) * rg * mu / m);
        }
        Ok(h)
    }
}
