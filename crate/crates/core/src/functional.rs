//! The quotient `Q`, its boundary reduction `Q̃`, and the first and second
//! variations of `Q̃` on the constraint manifold `𝓑 = {v > 0, ∫ v^p = 1}`.
//!
//! With `A = Λ + ĉ_n h_g`, `m = ∫ v^p` and `N = vᵀAv`,
//! `Q̃ = N m^{-2/p}`. Writing `s_i = ∫ v^{p-1} Y_i` and `W_ij = ∫ v^{p-2} Y_i Y_j`,
//!
//! ```text
//! ∇Q̃  = 2 m^{-2/p} A v − 2 N m^{-2/p-1} s
//! ∇²Q̃ = 2 m^{-2/p} A − 4 m^{-2/p-1} (A v sᵀ + s vᵀA) + 2 (2+p) N m^{-2/p-2} s sᵀ
//!       − 2 (p−1) N m^{-2/p-1} W
//! ```
//!
//! Conformal geometries are pulled back to the flat ball: `Q̃_{g_w}(v) = Q̃_δ(w v)`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{LabError, Result};
use crate::geometry::ModelGeometry;
use crate::harmonics::{check_compatible, BoundaryField, Spectral};
use crate::operators::{dtn_matrix, energy_form, HarmonicExtension, InteriorField};

/// Relative threshold for kernel membership of Hessian eigenvalues.
pub const KERNEL_THRESHOLD: f64 = 1e-7;

/// A functional on boundary coefficient vectors with exact derivatives.
///
/// All implementors are 0-homogeneous, so `∇F(v)·v = 0`.
pub trait BoundaryFunctional: Sync + Send {
    fn base(&self) -> &Functional;

    fn value(&self, c: &DVector<f64>) -> Result<f64>;

    /// Euclidean gradient in coefficient space (the L² gradient, since the basis is orthonormal).
    fn gradient(&self, c: &DVector<f64>) -> Result<DVector<f64>>;

    /// Full Euclidean Hessian in coefficient space.
    fn hessian(&self, c: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// Quantities shared by the value and derivative formulas.
#[derive(Debug, Clone)]
pub struct Moments {
    pub samples: Vec<f64>,
    /// `m = ∫ ρ |v|^p`.
    pub mass: f64,
    /// `s_i = ∫ ρ |v|^{p-2} v Y_i`.
    pub s: DVector<f64>,
    /// `A v`.
    pub av: DVector<f64>,
    /// `N = vᵀ A v`.
    pub numerator: f64,
}

impl Moments {
    pub fn value(&self, p: f64) -> f64 {
        self.numerator * self.mass.powf(-2.0 / p)
    }
}

/// Point of `𝓑`: a positive field of unit `p`-mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintState {
    pub v: BoundaryField,
    pub p_mass: f64,
}

/// `½∇²_𝓑 Q̃` restricted to the tangent space, with its spectrum.
#[derive(Debug, Clone)]
pub struct HessianData {
    /// Matrix in the tangent basis (`(N−1) × (N−1)`).
    pub matrix: DMatrix<f64>,
    /// L²-orthonormal tangent basis in coefficient space (`N × (N−1)`).
    pub tangent: DMatrix<f64>,
    /// Ascending eigenvalues.
    pub eigenvalues: DVector<f64>,
    /// Eigenvectors in tangent coordinates, columns matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl HessianData {
    fn from_matrix(matrix: DMatrix<f64>, tangent: DMatrix<f64>) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
        let eigenvalues = DVector::from_iterator(order.len(), order.iter().map(|i| eig.eigenvalues[*i]));
        let eigenvectors = DMatrix::from_columns(&order.iter().map(|i| eig.eigenvectors.column(*i)).collect::<Vec<_>>());
        Self {
            matrix,
            tangent,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).abs().max()
    }

    /// `max_k ‖H x_k − λ_k x_k‖`.
    pub fn eigen_residual(&self) -> f64 {
        (0..self.eigenvalues.len())
            .map(|k| {
                let x = self.eigenvectors.column(k);
                (&self.matrix * x - x * self.eigenvalues[k]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Positions of eigenvalues with `|λ| < 1e-7 · max(1, |λ_max|)`.
    pub fn kernel_indices(&self) -> Vec<usize> {
        let scale = self.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        (0..self.eigenvalues.len())
            .filter(|k| self.eigenvalues[*k].abs() < KERNEL_THRESHOLD * scale)
            .collect()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_indices().len()
    }

    /// Eigenvector `k` as a coefficient vector (L²-unit, tangent).
    pub fn eigenvector_coeffs(&self, k: usize) -> DVector<f64> {
        &self.tangent * self.eigenvectors.column(k)
    }

    pub fn write_eigenvalues_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "index,eigenvalue")?;
        for (k, v) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{k},{v:e}")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Discretized boundary quotient on a model geometry.
#[derive(Debug, Clone)]
pub struct Functional {
    geom: ModelGeometry,
    spectral: Arc<Spectral>,
    form: DMatrix<f64>,
    /// `w^p` at the nodes for conformal geometries.
    density: Option<Vec<f64>>,
    /// Boundary trace of `w` at the nodes for conformal geometries.
    factor: Option<Vec<f64>>,
}

impl Functional {
    /// Builds the functional on fields of degree `≤ degree`.
    ///
    /// Grids are exact to degree `p·(L + deg w)`, so every integral of the
    /// quotient and its derivatives is evaluated without aliasing.
    pub fn new(geom: &ModelGeometry, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(LabError::InvalidArgument("truncation degree L must be ≥ 1".into()));
        }
        let n = geom.n();
        let p = n.trace_exponent_int() as usize;
        let dw = geom.factor_degree();
        let target = p * (degree + dw);
        let spectral = Arc::new(Spectral::with_target(n, degree, target)?);
        let flat = crate::geometry::flat_ball(n.get())?;
        match geom.conformal_factor() {
            None => {
                let dtn = dtn_matrix(&flat, &spectral)?;
                let form = dtn.matrix + DMatrix::identity(spectral.len(), spectral.len()) * n.c_hat();
                Ok(Self {
                    geom: geom.clone(),
                    spectral,
                    form,
                    density: None,
                    factor: None,
                })
            }
            Some(w) => {
                if 2 * dw > degree {
                    return Err(LabError::InvalidArgument(format!(
                        "conformal factor degree {dw} exceeds L/2 = {}",
                        degree / 2
                    )));
                }
                let wide = Spectral::new(
                    crate::harmonics::Basis::new(n, degree + dw),
                    spectral.grid().clone(),
                )?;
                let ext = HarmonicExtension::new(w);
                let wb: Vec<f64> = spectral.grid().iter_nodes().map(|x| ext.value_and_radial(x).0).collect();
                let mut pull = DMatrix::zeros(wide.len(), spectral.len());
                for j in 0..spectral.len() {
                    let prod: Vec<f64> = spectral.values().column(j).iter().zip(&wb).map(|(y, w)| y * w).collect();
                    pull.set_column(j, &wide.analyze_samples(&prod));
                }
                let dtn = dtn_matrix(&flat, &wide)?;
                let wide_form = dtn.matrix + DMatrix::identity(wide.len(), wide.len()) * n.c_hat();
                let form = pull.tr_mul(&(wide_form * &pull));
                let form = (&form + form.transpose()) * 0.5;
                let density = wb.iter().map(|w| w.powi(p as i32)).collect();
                Ok(Self {
                    geom: geom.clone(),
                    spectral,
                    form,
                    density: Some(density),
                    factor: Some(wb),
                })
            }
        }
    }

    pub fn geometry(&self) -> &ModelGeometry {
        &self.geom
    }

    pub fn n(&self) -> Dimension {
        self.geom.n()
    }

    pub fn degree(&self) -> usize {
        self.spectral.degree()
    }

    pub fn len(&self) -> usize {
        self.spectral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectral.is_empty()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn shared_spectral(&self) -> Arc<Spectral> {
        Arc::clone(&self.spectral)
    }

    /// The quadratic form `A = Λ + ĉ_n h_g` (pulled back for conformal geometries).
    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn p(&self) -> f64 {
        self.n().trace_exponent()
    }

    /// Boundary trace of the conformal factor at the nodes, if any.
    pub fn factor_samples(&self) -> Option<&[f64]> {
        self.factor.as_deref()
    }

    fn density_at(&self, q: usize) -> f64 {
        self.density.as_ref().map_or(1.0, |d| d[q])
    }

    pub fn field(&self, coeffs: DVector<f64>) -> BoundaryField {
        BoundaryField {
            n: self.n(),
            degree: self.degree(),
            coeffs,
        }
    }

    pub fn check_field(&self, v: &BoundaryField) -> Result<()> {
        if v.n != self.n() {
            return Err(LabError::InvalidArgument("field dimension differs from geometry".into()));
        }
        check_compatible("field coefficients", self.len(), v.len())
    }

    /// Nodal samples; fails with the node location if any sample is not positive.
    pub fn positive_samples(&self, c: &DVector<f64>) -> Result<Vec<f64>> {
        let samples = self.spectral.synthesize_coeffs(c);
        if let Some((q, value)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            return Err(LabError::NonPositive {
                what: "boundary field",
                location: self.spectral.grid().node(q).to_vec(),
                value: *value,
            });
        }
        Ok(samples)
    }

    /// `∫ ρ |v|^p`.
    pub fn p_mass_coeffs(&self, c: &DVector<f64>) -> f64 {
        let p = self.p();
        let samples = self.spectral.synthesize_coeffs(c);
        samples
            .iter()
            .zip(self.spectral.weights())
            .enumerate()
            .map(|(q, (v, w))| w * self.density_at(q) * v.abs().powf(p))
            .sum()
    }

    pub fn p_mass(&self, v: &BoundaryField) -> Result<f64> {
        self.check_field(v)?;
        Ok(self.p_mass_coeffs(&v.coeffs))
    }

    pub fn moments(&self, c: &DVector<f64>) -> Result<Moments> {
        check_compatible("field coefficients", self.len(), c.len())?;
        let p = self.p();
        let samples = self.spectral.synthesize_coeffs(c);
        let mut mass = 0.0;
        let mut weighted = Vec::with_capacity(samples.len());
        for (q, (v, w)) in samples.iter().zip(self.spectral.weights()).enumerate() {
            let rw = w * self.density_at(q);
            let a = v.abs().powf(p - 2.0);
            mass += rw * a * v * v;
            weighted.push(rw * a * v);
        }
        if !(mass > 0.0) {
            return Err(LabError::ZeroMass);
        }
        let s = self.spectral.values().tr_mul(&DVector::from_vec(weighted));
        let av = &self.form * c;
        let numerator = c.dot(&av);
        Ok(Moments {
            samples,
            mass,
            s,
            av,
            numerator,
        })
    }

    /// `∫ ρ |v|^{p-2} Y_i Y_j`.
    pub fn weight_matrix(&self, samples: &[f64]) -> DMatrix<f64> {
        let p = self.p();
        let f: Vec<f64> = samples
            .iter()
            .enumerate()
            .map(|(q, v)| self.density_at(q) * v.abs().powf(p - 2.0))
            .collect();
        self.spectral.weighted_gram(&f)
    }

    pub fn eval_qtilde_coeffs(&self, c: &DVector<f64>) -> Result<f64> {
        Ok(self.moments(c)?.value(self.p()))
    }

    /// `Q̃(v) = ⟨(Λ + ĉ_n h_g) v, v⟩ / (∫ v^p)^{(n-2)/(n-1)}`.
    pub fn eval_qtilde(&self, v: &BoundaryField) -> Result<f64> {
        self.check_field(v)?;
        self.eval_qtilde_coeffs(&v.coeffs)
    }

    /// `Q(u) = E(u) / (∫_{∂B} |u|^p)^{2/p}` for `u = u₀ + Ev` on the flat ball.
    pub fn eval_q(&self, u: &InteriorField) -> Result<f64> {
        self.check_field(&u.v)?;
        let energy = energy_form(&self.geom, u)?;
        let mass = self.p_mass_coeffs(&u.v.coeffs);
        if !(mass > 0.0) {
            return Err(LabError::ZeroMass);
        }
        Ok(energy * mass.powf(-2.0 / self.p()))
    }

    /// Rescales a positive field to unit `p`-mass.
    pub fn normalize_p(&self, v: &BoundaryField) -> Result<ConstraintState> {
        self.check_field(v)?;
        self.positive_samples(&v.coeffs)?;
        let mass = self.p_mass_coeffs(&v.coeffs);
        let scaled = v.scaled(mass.powf(-1.0 / self.p()));
        let p_mass = self.p_mass_coeffs(&scaled.coeffs);
        Ok(ConstraintState { v: scaled, p_mass })
    }

    pub fn euclidean_gradient(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let mo = self.moments(c)?;
        let p = self.p();
        let alpha = mo.mass.powf(-2.0 / p);
        let beta = alpha / mo.mass;
        Ok(&mo.av * (2.0 * alpha) - &mo.s * (2.0 * mo.numerator * beta))
    }

    pub fn euclidean_hessian(&self, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mo = self.moments(c)?;
        let p = self.p();
        let m = mo.mass;
        let alpha = m.powf(-2.0 / p);
        let beta = alpha / m;
        let w = self.weight_matrix(&mo.samples);
        let cross = &mo.av * mo.s.transpose();
        let mut h = &self.form * (2.0 * alpha);
        h -= (&cross + cross.transpose()) * (4.0 * beta);
        h += &mo.s * mo.s.transpose() * (2.0 * (2.0 + p) * mo.numerator * beta / m);
        h -= w * (2.0 * (p - 1.0) * mo.numerator * beta);
        Ok(h)
    }

    /// L²-orthogonal projection of the first variation onto `T_v𝓑 = s^⊥`.
    pub fn grad_qtilde(&self, state: &ConstraintState) -> Result<BoundaryField> {
        self.check_field(&state.v)?;
        let g = self.euclidean_gradient(&state.v.coeffs)?;
        let s = self.moments(&state.v.coeffs)?.s;
        Ok(state.v.with_coeffs(project_orthogonal(&g, &s)))
    }

    /// `½∇²_𝓑 Q̃(v)` on the tangent space: `Tᵀ (m^{-2/p} A − (p−1) N m^{-2/p-1} W) T`.
    pub fn hessian_qtilde(&self, state: &ConstraintState) -> Result<HessianData> {
        self.check_field(&state.v)?;
        let mo = self.moments(&state.v.coeffs)?;
        let p = self.p();
        let alpha = mo.mass.powf(-2.0 / p);
        let beta = alpha / mo.mass;
        let w = self.weight_matrix(&mo.samples);
        let op = &self.form * alpha - w * ((p - 1.0) * mo.numerator * beta);
        let t = tangent_basis(&mo.s);
        let matrix = t.tr_mul(&(op * &t));
        Ok(HessianData::from_matrix(matrix, t))
    }

    /// Oblique projector `π φ = φ − (⟨v^{p-1}, φ⟩ / ⟨v^{p-1}, v⟩) v` onto `T_v𝓑`.
    pub fn project_tangent(&self, state: &ConstraintState, phi: &BoundaryField) -> Result<BoundaryField> {
        self.check_field(phi)?;
        let s = self.moments(&state.v.coeffs)?.s;
        let t = s.dot(&phi.coeffs) / s.dot(&state.v.coeffs);
        Ok(phi.axpy(-t, &state.v))
    }

    /// Tangency defect `⟨v^{p-1}, φ⟩` of a field at a state.
    pub fn tangency(&self, state: &ConstraintState, phi: &BoundaryField) -> Result<f64> {
        Ok(self.moments(&state.v.coeffs)?.s.dot(&phi.coeffs))
    }

    /// Constant `c` making a normalized critical point solve the boundary problem: `Q̃ / ĉ_n`.
    pub fn ypb_constant(&self, value: f64) -> f64 {
        value / self.n().c_hat()
    }

    /// Residual of `c_n ∂_ν u + ĉ_n h u = ĉ_n c u^{n/(n-2)}` on `∂B` (L² norm)
    /// combined with the interior residual `‖c_n Δu‖_{L²(B)}`.
    pub fn residual_ypb(&self, u: &InteriorField, c: f64) -> Result<f64> {
        if !self.geom.is_flat() {
            return Err(LabError::NonFlatGeometry("residual_ypb"));
        }
        self.check_field(&u.v)?;
        let n = self.n();
        let basis = self.spectral.basis();
        // ∂_r u on the sphere: l v_i from the harmonic part, −2 Σ_k u0_ik from the interior part.
        let radial = DVector::from_iterator(
            self.len(),
            basis.indices().iter().enumerate().map(|(i, ix)| {
                ix.l as f64 * u.v.coeffs[i] - 2.0 * u.u0.row(i).iter().sum::<f64>()
            }),
        );
        let values = self.spectral.synthesize_coeffs(&u.v.coeffs);
        let flux = self.spectral.synthesize_coeffs(&radial);
        let p = self.p();
        let boundary: f64 = values
            .iter()
            .zip(&flux)
            .zip(self.spectral.weights())
            .map(|((u, du), w)| {
                let r = n.c_n() * du + n.c_hat() * u - n.c_hat() * c * u.abs().powf(p - 2.0) * u;
                w * r * r
            })
            .sum();
        let interior = n.c_n() * u.laplacian_l2();
        Ok((boundary + interior * interior).sqrt())
    }
}

impl BoundaryFunctional for Functional {
    fn base(&self) -> &Functional {
        self
    }

    fn value(&self, c: &DVector<f64>) -> Result<f64> {
        self.eval_qtilde_coeffs(c)
    }

    fn gradient(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        self.euclidean_gradient(c)
    }

    fn hessian(&self, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.euclidean_hessian(c)
    }
}

/// `g − (sᵀg / sᵀs) s`.
pub fn project_orthogonal(g: &DVector<f64>, s: &DVector<f64>) -> DVector<f64> {
    g - s * (s.dot(g) / s.dot(s))
}

/// L²-orthonormal basis of `s^⊥`, from the Householder reflector sending `e_0` to `ŝ`.
///
/// When `s` is a multiple of `e_0` this is the identity minus its first column,
/// so harmonic degrees of basis vectors are preserved.
pub fn tangent_basis(s: &DVector<f64>) -> DMatrix<f64> {
    let n = s.len();
    let mut u = s / s.norm();
    if u[0] > 0.0 {
        u[0] -= 1.0;
    } else {
        u[0] += 1.0;
    }
    let nu = u.norm();
    let mut h = DMatrix::identity(n, n);
    if nu > 1e-300 {
        u /= nu;
        h -= &u * u.transpose() * 2.0;
    }
    h.columns(1, n - 1).into_owned()
}

/// Orthonormal basis of the complement of the span of `vectors` (assumed orthonormal).
pub fn orthogonal_complement(vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let n = vectors.nrows();
    let k = vectors.ncols();
    let proj = DMatrix::identity(n, n) - vectors * vectors.transpose();
    let eig = SymmetricEigen::new((&proj + proj.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    DMatrix::from_columns(&order[..n - k].iter().map(|i| eig.eigenvectors.column(*i)).collect::<Vec<_>>())
}
