use nalgebra::{DMatrix, DVector};
use num_dual::{Dual64, DualNum};
use serde::{Deserialize, Serialize};

use super::extension::{dual_gradient, BallFunction};
use crate::dimension::Dimension;
use crate::error::{LabError, Result};
use crate::geometry::ModelGeometry;
use crate::harmonics::{Basis, BoundaryField};

/// `u = u₀ + Ev` on the flat ball.
///
/// The interior part is `u₀ = Σ_{i,k} u0[(i,k)] (1 − r²) r^{2k} R_i(x)` with `R_i`
/// the solid harmonics, so it vanishes on the sphere. Since `Ev` is harmonic
/// and `u₀|_{∂B} = 0`, the two parts are orthogonal for the Dirichlet form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "InteriorRepr", try_from = "InteriorRepr")]
pub struct InteriorField {
    pub v: BoundaryField,
    /// `N × K` interior coefficients, `K` radial functions per harmonic.
    pub u0: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct InteriorRepr {
    boundary: BoundaryField,
    radial: usize,
    u0: Vec<Vec<f64>>,
}

impl From<InteriorField> for InteriorRepr {
    fn from(u: InteriorField) -> Self {
        Self {
            radial: u.u0.ncols(),
            u0: u.u0.row_iter().map(|r| r.iter().copied().collect()).collect(),
            boundary: u.v,
        }
    }
}

impl TryFrom<InteriorRepr> for InteriorField {
    type Error = LabError;

    fn try_from(r: InteriorRepr) -> Result<Self> {
        if r.u0.iter().any(|row| row.len() != r.radial) {
            return Err(LabError::InvalidArgument("ragged interior coefficient table".into()));
        }
        let rows = r.u0.len();
        let u0 = DMatrix::from_row_iterator(rows, r.radial, r.u0.into_iter().flatten());
        InteriorField::new(r.boundary, u0)
    }
}

impl InteriorField {
    pub fn new(v: BoundaryField, u0: DMatrix<f64>) -> Result<Self> {
        if u0.nrows() != v.len() {
            return Err(LabError::SizeMismatch {
                what: "interior coefficient rows",
                expected: v.len(),
                found: u0.nrows(),
            });
        }
        Ok(Self { v, u0 })
    }

    /// The harmonic extension `Ev` with no interior part.
    pub fn harmonic(v: BoundaryField) -> Self {
        let rows = v.len();
        Self {
            v,
            u0: DMatrix::zeros(rows, 0),
        }
    }

    pub fn n(&self) -> Dimension {
        self.v.n
    }

    pub fn radial_count(&self) -> usize {
        self.u0.ncols()
    }

    /// Boundary trace `tr u = v`.
    pub fn trace(&self) -> &BoundaryField {
        &self.v
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            v: self.v.scaled(t),
            u0: &self.u0 * t,
        }
    }

    /// Same field with the interior part removed.
    pub fn harmonic_part(&self) -> Self {
        Self::harmonic(self.v.clone())
    }

    /// Same field with the boundary trace set to zero.
    pub fn interior_part(&self) -> Self {
        Self {
            v: self.v.scaled(0.0),
            u0: self.u0.clone(),
        }
    }

    pub fn evaluator(&self) -> InteriorEvaluator {
        InteriorEvaluator {
            basis: Basis::new(self.v.n, self.v.degree),
            v: self.v.coeffs.as_slice().to_vec(),
            u0: self.u0.clone(),
        }
    }

    /// Per-harmonic coefficient vector `(v_i, u0_{i,0}, …, u0_{i,K-1})`.
    fn block(&self, i: usize) -> DVector<f64> {
        let k = self.radial_count();
        DVector::from_iterator(k + 1, std::iter::once(self.v.coeffs[i]).chain(self.u0.row(i).iter().copied()))
    }

    fn quadratic(&self, select: impl Fn(&RadialBlocks) -> DMatrix<f64>) -> f64 {
        let basis_degrees = Basis::new(self.v.n, self.v.degree).degrees();
        let mut cache: Vec<Option<DMatrix<f64>>> = vec![None; self.v.degree + 1];
        let mut total = 0.0;
        for (i, l) in basis_degrees.iter().enumerate() {
            let m = cache[*l]
                .get_or_insert_with(|| select(&RadialBlocks::new(self.v.n, *l, self.radial_count())));
            let c = self.block(i);
            total += c.dot(&(&*m * &c));
        }
        total
    }

    /// `∫_B |∇u|²`, closed form.
    pub fn dirichlet(&self) -> f64 {
        self.quadratic(|b| b.dirichlet.clone())
    }

    /// `∫_B u²`, closed form.
    pub fn mass(&self) -> f64 {
        self.quadratic(|b| b.mass.clone())
    }

    /// `c_n ∫ ∇u₀·∇(Ev)`; vanishes by construction.
    pub fn harmonic_cross_term(&self) -> f64 {
        let c_n = self.v.n.c_n();
        let degrees = Basis::new(self.v.n, self.v.degree).degrees();
        let k = self.radial_count();
        let mut total = 0.0;
        for (i, l) in degrees.iter().enumerate() {
            let b = RadialBlocks::new(self.v.n, *l, k);
            for j in 0..k {
                total += self.v.coeffs[i] * b.dirichlet[(0, j + 1)] * self.u0[(i, j)];
            }
        }
        c_n * total
    }

    /// `⟨u₀, L u₀⟩ = c_n ∫|∇u₀|²` (flat ball, `R ≡ 0`).
    pub fn interior_energy(&self) -> f64 {
        self.v.n.c_n() * self.interior_part().dirichlet()
    }

    /// Gradient of [`interior_energy`](Self::interior_energy) with respect to `u0`.
    pub fn interior_energy_gradient(&self) -> DMatrix<f64> {
        let k = self.radial_count();
        let degrees = Basis::new(self.v.n, self.v.degree).degrees();
        let mut cache: Vec<Option<DMatrix<f64>>> = vec![None; self.v.degree + 1];
        let mut grad = DMatrix::zeros(self.u0.nrows(), k);
        let scale = 2.0 * self.v.n.c_n();
        for (i, l) in degrees.iter().enumerate() {
            let sub = cache[*l].get_or_insert_with(|| {
                RadialBlocks::new(self.v.n, *l, k).dirichlet.view((1, 1), (k, k)).into_owned()
            });
            let row = &*sub * self.u0.row(i).transpose() * scale;
            grad.set_row(i, &row.transpose());
        }
        grad
    }

    /// `‖Δu‖_{L²(B)}` in closed form; only the interior part contributes.
    pub fn laplacian_l2(&self) -> f64 {
        let n = self.v.n.get() as f64;
        let degrees = Basis::new(self.v.n, self.v.degree).degrees();
        let mut total = 0.0;
        for (i, l) in degrees.iter().enumerate() {
            let lf = *l as f64;
            // Δ(r^j Y_l) = (j − l)(j + l + n − 2) r^{j−2} Y_l
            let mut terms: Vec<(f64, f64)> = Vec::new();
            for k in 0..self.radial_count() {
                let c = self.u0[(i, k)];
                for (j, sign) in [(lf + 2.0 * k as f64, 1.0), (lf + 2.0 * k as f64 + 2.0, -1.0)] {
                    let factor = (j - lf) * (j + lf + n - 2.0);
                    if factor != 0.0 {
                        terms.push((j - 2.0, sign * c * factor));
                    }
                }
            }
            for (p1, c1) in &terms {
                for (p2, c2) in &terms {
                    total += c1 * c2 / (p1 + p2 + n);
                }
            }
        }
        total.max(0.0).sqrt()
    }

    /// Diagonal `H¹` weights `l + 1/(2l+n)` of the harmonic part, the cross
    /// vector `⟨E Y_i, u₀⟩_{H¹}` and `‖u₀‖²_{H¹}`.
    pub fn h1_harmonic_data(&self) -> (DVector<f64>, DVector<f64>, f64) {
        let basis = Basis::new(self.v.n, self.v.degree);
        let n = self.v.n.get() as f64;
        let k = self.radial_count();
        let mut d = DVector::zeros(basis.len());
        let mut m = DVector::zeros(basis.len());
        let mut interior = 0.0;
        for (i, ix) in basis.indices().iter().enumerate() {
            let l = ix.l as f64;
            d[i] = l + 1.0 / (2.0 * l + n);
            if k == 0 {
                continue;
            }
            let b = RadialBlocks::new(self.v.n, ix.l, k);
            let full = &b.dirichlet + &b.mass;
            let row = self.u0.row(i).transpose();
            m[i] = (0..k).map(|j| full[(0, j + 1)] * row[j]).sum();
            let sub = full.view((1, 1), (k, k));
            interior += row.dot(&(sub * &row));
        }
        (d, m, interior)
    }
}

/// Radial Gram blocks for one harmonic degree in the basis
/// `g_0 = r^l`, `g_{k+1} = (1 − r²) r^{l+2k}`.
struct RadialBlocks {
    dirichlet: DMatrix<f64>,
    mass: DMatrix<f64>,
}

impl RadialBlocks {
    fn new(n: Dimension, l: usize, k: usize) -> Self {
        let nf = n.get() as f64;
        let lf = l as f64;
        let lambda = n.laplace_eigenvalue(l);
        let mut funcs: Vec<Vec<(f64, f64)>> = vec![vec![(lf, 1.0)]];
        for j in 0..k {
            let p = lf + 2.0 * j as f64;
            funcs.push(vec![(p, 1.0), (p + 2.0, -1.0)]);
        }
        let size = k + 1;
        let mut dirichlet = DMatrix::zeros(size, size);
        let mut mass = DMatrix::zeros(size, size);
        for a in 0..size {
            for b in 0..size {
                let (mut dv, mut mv) = (0.0, 0.0);
                for (p1, c1) in &funcs[a] {
                    for (p2, c2) in &funcs[b] {
                        dv += c1 * c2 * (p1 * p2 + lambda) / (p1 + p2 + nf - 2.0);
                        mv += c1 * c2 / (p1 + p2 + nf);
                    }
                }
                dirichlet[(a, b)] = dv;
                mass[(a, b)] = mv;
            }
        }
        Self { dirichlet, mass }
    }
}

/// Pointwise evaluator of an [`InteriorField`].
#[derive(Debug, Clone)]
pub struct InteriorEvaluator {
    basis: Basis,
    v: Vec<f64>,
    u0: DMatrix<f64>,
}

impl InteriorEvaluator {
    pub fn eval_dual<T: DualNum<Primitive = f64> + Copy>(&self, x: &[T]) -> T {
        let r2 = x.iter().fold(T::zero(), |acc, c| acc + *c * *c);
        let bump = T::one() - r2;
        let solid = self.basis.eval_solid(x);
        let mut total = T::zero();
        for (i, y) in solid.iter().enumerate() {
            let mut radial = T::zero();
            let mut power = T::one();
            for k in 0..self.u0.ncols() {
                radial += power * self.u0[(i, k)];
                power *= r2;
            }
            total += *y * (bump * radial + self.v[i]);
        }
        total
    }
}

impl BallFunction for InteriorEvaluator {
    fn n(&self) -> Dimension {
        self.basis.dimension()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval_dual(x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        dual_gradient(x, |p: &[Dual64]| self.eval_dual(p))
    }
}

/// `∫_B |∇u|² + ∫_B u²`, square-rooted.
pub fn h1_norm(u: &InteriorField) -> f64 {
    (u.dirichlet() + u.mass()).max(0.0).sqrt()
}

/// `c_n ∫|∇u|² + ∫ R_g u² + ĉ_n ∫_{∂B} h_g u²` on the flat ball.
pub fn energy_form(geom: &ModelGeometry, u: &InteriorField) -> Result<f64> {
    if !geom.is_flat() {
        return Err(LabError::NonFlatGeometry("energy_form on interior fields"));
    }
    let n = u.n();
    Ok(n.c_n() * u.dirichlet() + n.c_hat() * u.v.coeffs.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::flat_ball;
    use crate::operators::extension::BallQuadrature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: usize, degree: usize, k: usize, seed: u64) -> InteriorField {
        let n = Dimension::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = n.basis_size(degree);
        let v = BoundaryField::new(n, degree, DVector::from_fn(size, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let u0 = DMatrix::from_fn(size, k, |_, _| rng.random_range(-1.0..1.0));
        InteriorField::new(v, u0).unwrap()
    }

    #[test]
    fn closed_forms_match_ball_quadrature() {
        for n in [3usize, 4] {
            let u = random_field(n, 3, 2, 7 + n as u64);
            let q = BallQuadrature::new(u.n(), 24);
            let e = u.evaluator();
            let dir = q.dirichlet(&e);
            let mass = q.integrate(|x| e.value(x).powi(2));
            assert!((dir - u.dirichlet()).abs() < 1e-10 * dir, "n = {n}");
            assert!((mass - u.mass()).abs() < 1e-10 * mass);
            let cross = q.integrate(|x| {
                let g1 = e.value_and_gradient(x).1;
                let h = u.harmonic_part().evaluator().value_and_gradient(x).1;
                let g0: Vec<f64> = g1.iter().zip(&h).map(|(a, b)| a - b).collect();
                g0.iter().zip(&h).map(|(a, b)| a * b).sum()
            });
            assert!(cross.abs() < 1e-10);
            assert!(u.harmonic_cross_term().abs() < 1e-12);
        }
    }

    #[test]
    fn energy_examples() {
        let g = flat_ball(3).unwrap();
        let n = g.n();
        let c = BoundaryField::constant(n, 2, 0.7);
        let e = energy_form(&g, &InteriorField::harmonic(c)).unwrap();
        assert!((e - 4.0 * 4.0 * std::f64::consts::PI * 0.49).abs() < 1e-12);
        let i10 = Basis::new(n, 2).position(1, 0).unwrap();
        let y = InteriorField::harmonic(BoundaryField::unit(n, 2, i10));
        assert!((energy_form(&g, &y).unwrap() - 12.0).abs() < 1e-12);
        let z = InteriorField::harmonic(BoundaryField::zeros(n, 2));
        assert_eq!(energy_form(&g, &z).unwrap(), 0.0);
    }

    #[test]
    fn h1_of_harmonic_part() {
        let u = random_field(3, 4, 0, 3);
        let (d, _, _) = u.h1_harmonic_data();
        let direct: f64 = u.v.coeffs.iter().zip(d.iter()).map(|(c, d)| d * c * c).sum();
        assert!((h1_norm(&u).powi(2) - direct).abs() < 1e-12);
    }

    #[test]
    fn h1_cross_data_matches_norm() {
        let u = random_field(4, 2, 3, 11);
        let (d, m, interior) = u.h1_harmonic_data();
        let v = &u.v.coeffs;
        let expected: f64 = v.iter().zip(d.iter()).map(|(c, d)| d * c * c).sum::<f64>() + 2.0 * m.dot(v) + interior;
        assert!((h1_norm(&u).powi(2) - expected).abs() < 1e-12);
    }

    #[test]
    fn laplacian_vanishes_for_harmonic_fields() {
        let u = random_field(3, 3, 0, 5);
        assert_eq!(u.laplacian_l2(), 0.0);
        let w = random_field(3, 2, 2, 6);
        let q = BallQuadrature::new(w.n(), 20);
        let e = w.evaluator();
        // Δu by central differences of the dual gradient.
        let h = 1e-5;
        let lap = q.integrate(|x| {
            let mut s = 0.0;
            for d in 0..3 {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[d] += h;
                xm[d] -= h;
                s += (e.value_and_gradient(&xp).1[d] - e.value_and_gradient(&xm).1[d]) / (2.0 * h);
            }
            s * s
        });
        assert!((lap.sqrt() - w.laplacian_l2()).abs() < 1e-6 * w.laplacian_l2());
    }

    #[test]
    fn json_round_trip() {
        let u = random_field(3, 1, 2, 1);
        let s = serde_json::to_string(&u).unwrap();
        let back: InteriorField = serde_json::from_str(&s).unwrap();
        assert_eq!(u, back);
    }

    #[test]
    fn interior_energy_gradient_matches_differences() {
        let u = random_field(3, 2, 2, 8);
        let g = u.interior_energy_gradient();
        let h = 1e-6;
        for i in 0..u.u0.nrows() {
            for k in 0..2 {
                let mut p = u.clone();
                let mut m = u.clone();
                p.u0[(i, k)] += h;
                m.u0[(i, k)] -= h;
                let fd = (p.interior_energy() - m.interior_energy()) / (2.0 * h);
                assert!((fd - g[(i, k)]).abs() < 1e-6 * (1.0 + g.amax()));
            }
        }
    }
}
