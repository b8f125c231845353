use num_dual::Dual64;

use crate::dimension::Dimension;
use crate::harmonics::{gauss_legendre_interval, Basis, BoundaryField, QuadratureGrid};

/// A scalar function on the closed ball that can report its gradient.
pub trait BallFunction: Sync {
    fn n(&self) -> Dimension;

    fn value(&self, x: &[f64]) -> f64;

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>);

    /// Value and radial derivative `x·∇u` (the outward normal derivative on `|x| = 1`).
    fn value_and_radial(&self, x: &[f64]) -> (f64, f64) {
        let (v, g) = self.value_and_gradient(x);
        (v, g.iter().zip(x).map(|(g, x)| g * x).sum())
    }
}

/// Evaluates `f` at `x` once per coordinate with a dual seed in that coordinate.
pub(crate) fn dual_gradient(x: &[f64], f: impl Fn(&[Dual64]) -> Dual64) -> (f64, Vec<f64>) {
    let mut grad = Vec::with_capacity(x.len());
    let mut value = 0.0;
    for d in 0..x.len() {
        let pt: Vec<Dual64> = x
            .iter()
            .enumerate()
            .map(|(j, v)| Dual64::new(*v, if j == d { 1.0 } else { 0.0 }))
            .collect();
        let out = f(&pt);
        value = out.re;
        grad.push(out.eps);
    }
    (value, grad)
}

/// Harmonic extension `Ev(x) = Σ v_i r^l Y_i(x/r)` of boundary data.
#[derive(Debug, Clone)]
pub struct HarmonicExtension {
    basis: Basis,
    coeffs: Vec<f64>,
}

impl HarmonicExtension {
    pub fn new(v: &BoundaryField) -> Self {
        Self {
            basis: Basis::new(v.n, v.degree),
            coeffs: v.coeffs.as_slice().to_vec(),
        }
    }

    pub fn eval_dual(&self, x: &[Dual64]) -> Dual64 {
        self.basis
            .eval_solid(x)
            .iter()
            .zip(&self.coeffs)
            .map(|(y, c)| *y * *c)
            .sum()
    }

    /// Value and radial derivative `∂_t Ev(x + t x)|_{t=0}`.
    pub fn value_and_radial(&self, x: &[f64]) -> (f64, f64) {
        let pt: Vec<Dual64> = x.iter().map(|v| Dual64::new(*v, *v)).collect();
        let out = self.eval_dual(&pt);
        (out.re, out.eps)
    }
}

impl BallFunction for HarmonicExtension {
    fn n(&self) -> Dimension {
        self.basis.dimension()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.basis
            .eval(x)
            .iter()
            .zip(&self.coeffs)
            .map(|(y, c)| y * c)
            .sum()
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        dual_gradient(x, |p| self.eval_dual(p))
    }

    fn value_and_radial(&self, x: &[f64]) -> (f64, f64) {
        HarmonicExtension::value_and_radial(self, x)
    }
}

/// Harmonic extension of boundary data.
pub fn harmonic_extend(v: &BoundaryField) -> HarmonicExtension {
    HarmonicExtension::new(v)
}

/// Product `a·b` of two ball functions.
pub struct Product<'a> {
    pub a: &'a dyn BallFunction,
    pub b: &'a dyn BallFunction,
}

impl BallFunction for Product<'_> {
    fn n(&self) -> Dimension {
        self.a.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.a.value(x) * self.b.value(x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (va, ga) = self.a.value_and_gradient(x);
        let (vb, gb) = self.b.value_and_gradient(x);
        (va * vb, ga.iter().zip(&gb).map(|(a, b)| a * vb + va * b).collect())
    }
}

/// Difference `a − b` of two ball functions.
pub struct Difference<'a> {
    pub a: &'a dyn BallFunction,
    pub b: &'a dyn BallFunction,
}

impl BallFunction for Difference<'_> {
    fn n(&self) -> Dimension {
        self.a.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.a.value(x) - self.b.value(x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (va, ga) = self.a.value_and_gradient(x);
        let (vb, gb) = self.b.value_and_gradient(x);
        (va - vb, ga.iter().zip(&gb).map(|(a, b)| a - b).collect())
    }
}

/// Product rule on the ball: Gauss–Legendre in `r` with weight `r^{n-1}` times a sphere grid.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    pub n: Dimension,
    /// Points stored row-major with stride `n`.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Boundary grid (also used for surface integrals).
    pub boundary: QuadratureGrid,
}

impl BallQuadrature {
    /// Exact for polynomials of degree `≤ degree` on the ball.
    pub fn new(n: Dimension, degree: usize) -> Self {
        let boundary = QuadratureGrid::new(n, degree);
        let (r, wr) = gauss_legendre_interval(degree / 2 + n.get(), 0.0, 1.0);
        let mut points = Vec::with_capacity(r.len() * boundary.len() * n.get());
        let mut weights = Vec::with_capacity(r.len() * boundary.len());
        for (ri, wri) in r.iter().zip(&wr) {
            let radial = wri * ri.powi(n.get() as i32 - 1);
            for (x, w) in boundary.iter_nodes().zip(&boundary.weights) {
                points.extend(x.iter().map(|c| c * ri));
                weights.push(radial * w);
            }
        }
        Self {
            n,
            points,
            weights,
            boundary,
        }
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.n.get())
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.iter_points().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_boundary(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.boundary
            .iter_nodes()
            .zip(&self.boundary.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    /// `∫_B |∇u|²`.
    pub fn dirichlet(&self, u: &dyn BallFunction) -> f64 {
        self.integrate(|x| {
            let (_, g) = u.value_and_gradient(x);
            g.iter().map(|c| c * c).sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volume_and_moments() {
        for n in [3usize, 4] {
            let d = Dimension::new(n).unwrap();
            let q = BallQuadrature::new(d, 8);
            assert!((q.integrate(|_| 1.0) - d.ball_volume()).abs() < 1e-13);
            // ∫_B |x|² = |S| / (n + 2)
            let m2 = q.integrate(|x| x.iter().map(|c| c * c).sum());
            assert!((m2 - d.sphere_area() / (n as f64 + 2.0)).abs() < 1e-13);
        }
        assert!((Dimension::new(3).unwrap().ball_volume() - 4.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn extension_of_degree_one() {
        let n = Dimension::new(3).unwrap();
        let basis = Basis::new(n, 1);
        let i = basis.position(1, 0).unwrap();
        let e = harmonic_extend(&BoundaryField::unit(n, 1, i));
        let omega = [0.6, 0.0, 0.8];
        let y = basis.eval(&omega)[i];
        for r in [0.0, 0.3, 0.9] {
            let x: Vec<f64> = omega.iter().map(|c| c * r).collect();
            assert!((e.value(&x) - r * y).abs() < 1e-15);
        }
        let c = harmonic_extend(&BoundaryField::unit(n, 1, 0).scaled(2.0));
        assert!((c.value(&[0.1, 0.2, 0.3]) - 2.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    }
}
