use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::functional::{
    orthogonal_complement, project_orthogonal, tangent_basis, BoundaryFunctional, ConstraintState, KERNEL_THRESHOLD,
};
use crate::harmonics::BoundaryField;

/// Critical points are accepted when the projected gradient is below this.
pub const CRITICAL_TOLERANCE: f64 = 1e-8;

/// Kernel of `½∇²_𝓑` at a critical point.
#[derive(Debug, Clone)]
pub struct KernelData {
    /// `N × l₀`, L²-orthonormal tangent columns.
    pub matrix: DMatrix<f64>,
    pub fields: Vec<BoundaryField>,
    /// Full ascending tangent spectrum.
    pub eigenvalues: DVector<f64>,
    /// Smallest eigenvalue outside the kernel.
    pub gap: f64,
}

impl KernelData {
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Tangent half-Hessian `½ Tᵀ ∇²F T` at a critical point; the Euclidean gradient vanishes there.
pub(crate) fn tangent_hessian(f: &dyn BoundaryFunctional, c: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let s = f.base().moments(c)?.s;
    let t = tangent_basis(&s);
    let h = f.hessian(c)?;
    let m = t.tr_mul(&(h * &t)) * 0.5;
    Ok(((&m + m.transpose()) * 0.5, t))
}

pub fn projected_gradient_norm(f: &dyn BoundaryFunctional, c: &DVector<f64>) -> Result<f64> {
    let s = f.base().moments(c)?.s;
    Ok(project_orthogonal(&f.gradient(c)?, &s).norm())
}

/// Kernel of the second variation at a critical state.
pub fn kernel(f: &dyn BoundaryFunctional, state: &ConstraintState) -> Result<KernelData> {
    f.base().check_field(&state.v)?;
    let c = &state.v.coeffs;
    let gradient_norm = projected_gradient_norm(f, c)?;
    if !(gradient_norm < CRITICAL_TOLERANCE) {
        return Err(LabError::NotCritical { gradient_norm });
    }
    let (m, t) = tangent_hessian(f, c)?;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let eigenvalues = DVector::from_iterator(order.len(), order.iter().map(|i| eig.eigenvalues[*i]));
    let scale = eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let kernel: Vec<usize> = order
        .iter()
        .copied()
        .filter(|i| eig.eigenvalues[*i].abs() < KERNEL_THRESHOLD * scale)
        .collect();
    let cols: Vec<DVector<f64>> = kernel.iter().map(|i| &t * eig.eigenvectors.column(*i)).collect();
    let matrix = if cols.is_empty() {
        DMatrix::zeros(c.len(), 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    let gap = eigenvalues
        .iter()
        .copied()
        .filter(|v| v.abs() >= KERNEL_THRESHOLD * scale)
        .fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let fields = cols.iter().map(|k| state.v.with_coeffs(k.clone())).collect();
    Ok(KernelData {
        matrix,
        fields,
        eigenvalues,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionOptions {
    /// Largest admissible `|a|`.
    pub a_max: f64,
    pub max_newton: usize,
    /// Projected stationarity residual at the `p`-normalized point.
    pub tolerance: f64,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            a_max: 0.1,
            max_newton: 50,
            tolerance: 1e-11,
        }
    }
}

/// A point `h(a, F(a)) = v + Σ a_j k_j + F(a)` of the reduced variety.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphPoint {
    pub a: Vec<f64>,
    /// `F(a) ∈ K^⊥ ∩ T_v𝓑` as coefficients.
    pub b: Vec<f64>,
    pub q: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Lyapunov–Schmidt data at a critical point `v`: `T_v𝓑 = K ⊕ span Φ`.
pub struct ReductionContext<'a> {
    f: &'a dyn BoundaryFunctional,
    v: DVector<f64>,
    s_hat: DVector<f64>,
    kernel: KernelData,
    phi: DMatrix<f64>,
    critical_value: f64,
    opts: ReductionOptions,
}

impl<'a> ReductionContext<'a> {
    pub fn new(f: &'a dyn BoundaryFunctional, state: &ConstraintState, opts: ReductionOptions) -> Result<Self> {
        let kernel = kernel(f, state)?;
        let v = state.v.coeffs.clone();
        let s = f.base().moments(&v)?.s;
        let s_hat = &s / s.norm();
        let mut cols = vec![s_hat.clone()];
        cols.extend(kernel.matrix.column_iter().map(|c| c.into_owned()));
        let phi = orthogonal_complement(&DMatrix::from_columns(&cols));
        let critical_value = f.value(&v)?;
        Ok(Self {
            f,
            v,
            s_hat,
            kernel,
            phi,
            critical_value,
            opts,
        })
    }

    pub fn functional(&self) -> &dyn BoundaryFunctional {
        self.f
    }

    pub fn kernel(&self) -> &KernelData {
        &self.kernel
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Orthonormal basis of `K^⊥ ∩ T_v𝓑`.
    pub fn complement(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn critical_point(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn critical_value(&self) -> f64 {
        self.critical_value
    }

    pub fn options(&self) -> &ReductionOptions {
        &self.opts
    }

    /// Unit normal `ŝ ∝ v^{p−1}` to `T_v𝓑`.
    pub fn normal(&self) -> &DVector<f64> {
        &self.s_hat
    }

    /// `v + K a + Φ y`.
    pub fn point(&self, a: &[f64], y: &DVector<f64>) -> DVector<f64> {
        &self.v + &self.kernel.matrix * DVector::from_column_slice(a) + &self.phi * y
    }

    fn residual(&self, h: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let g = self.phi.tr_mul(&self.f.gradient(h)?);
        // ∇F is (−1)-homogeneous: measure at the p-normalized point.
        let norm = self.f.base().p_mass_coeffs(h).powf(1.0 / self.f.base().p());
        let r = g.norm() * norm;
        Ok((g, r))
    }

    /// Solves `Φᵀ ∇F(v + K a + Φ y) = 0` for `y` by damped Newton.
    pub fn solve_graph(&self, a: &[f64]) -> Result<GraphPoint> {
        self.solve_graph_from(a, None)
    }

    pub fn solve_graph_from(&self, a: &[f64], start: Option<&DVector<f64>>) -> Result<GraphPoint> {
        if a.len() != self.kernel_dim() {
            return Err(LabError::SizeMismatch {
                what: "kernel coordinates",
                expected: self.kernel_dim(),
                found: a.len(),
            });
        }
        let norm_a = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_a > self.opts.a_max * (1.0 + 1e-12) {
            return Err(LabError::InvalidArgument(format!(
                "|a| = {norm_a:.3e} exceeds a_max = {}",
                self.opts.a_max
            )));
        }
        let mut y = start.cloned().unwrap_or_else(|| DVector::zeros(self.phi.ncols()));
        let mut h = self.point(a, &y);
        let (mut g, mut r) = self.residual(&h)?;
        let mut history = vec![r];
        let mut iterations = 0;
        while r >= self.opts.tolerance {
            if iterations >= self.opts.max_newton {
                return Err(LabError::NewtonDivergence { history });
            }
            iterations += 1;
            let jac = self.phi.tr_mul(&(self.f.hessian(&h)? * &self.phi));
            let step = jac
                .lu()
                .solve(&(-&g))
                .ok_or(LabError::LinearAlgebra("singular graph Jacobian"))?;
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-6 {
                let y_new = &y + &step * t;
                let h_new = self.point(a, &y_new);
                if let Ok((g_new, r_new)) = self.residual(&h_new) {
                    if r_new < r {
                        accepted = Some((y_new, h_new, g_new, r_new));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((y_new, h_new, g_new, r_new)) = accepted else {
                return Err(LabError::NewtonDivergence { history });
            };
            y = y_new;
            h = h_new;
            g = g_new;
            r = r_new;
            history.push(r);
        }
        let b = &self.phi * &y;
        Ok(GraphPoint {
            a: a.to_vec(),
            b: b.iter().copied().collect(),
            q: self.f.value(&h)?,
            residual: r,
            iterations,
        })
    }

    /// Coefficients of `h(a, F(a))` for a solved point.
    pub fn variety_point(&self, point: &GraphPoint) -> DVector<f64> {
        &self.v + &self.kernel.matrix * DVector::from_column_slice(&point.a) + DVector::from_column_slice(&point.b)
    }

    pub fn reduced_q(&self, a: &[f64]) -> Result<f64> {
        Ok(self.solve_graph(a)?.q)
    }

    /// Projection onto the reduced variety: rescale so the normal component matches `v`,
    /// read off `a = Kᵀ(λu − v)` and return `h(a, F(a))/λ`.
    pub fn project_to_variety(&self, u: &DVector<f64>) -> Result<(DVector<f64>, GraphPoint)> {
        let lambda = self.s_hat.dot(&self.v) / self.s_hat.dot(u);
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(LabError::InvalidArgument("field has no positive normal component".into()));
        }
        let a: Vec<f64> = self.kernel.matrix.tr_mul(&(u * lambda - &self.v)).iter().copied().collect();
        let point = self.solve_graph(&a)?;
        Ok((self.variety_point(&point) / lambda, point))
    }

    /// Central-difference derivative of `q` along `δa`.
    pub fn reduced_derivative(&self, a: &[f64], da: &[f64], step: f64) -> Result<f64> {
        let plus: Vec<f64> = a.iter().zip(da).map(|(a, d)| a + step * d).collect();
        let minus: Vec<f64> = a.iter().zip(da).map(|(a, d)| a - step * d).collect();
        Ok((self.reduced_q(&plus)? - self.reduced_q(&minus)?) / (2.0 * step))
    }
}
