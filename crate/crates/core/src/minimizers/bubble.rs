use std::f64::consts::PI;

use nalgebra::DVector;
use num_dual::{Dual64, DualNum};
use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{LabError, Result};
use crate::harmonics::{Basis, BoundaryField, QuadratureGrid};
use crate::operators::{dual_gradient, BallFunction};

/// Parameters of `u(y) = c (1 − 2 a·y + |a|² |y|²)^{(2−n)/2}`.
///
/// The chart point `a = y₀/|y₀|²` encodes the pole `y₀` with `ρ = |a| = 1/|y₀|`;
/// `a = 0` is the constant `c`. In pole form the same function reads
/// `c ρ^{2−n} |y − y₀|^{2−n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub amplitude: f64,
    pub chart: Vec<f64>,
}

impl BubbleParams {
    pub fn new(amplitude: f64, chart: Vec<f64>) -> Result<Self> {
        let rho = chart.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(LabError::InvalidArgument(format!("bubble amplitude {amplitude} must be positive")));
        }
        if !(rho < 1.0) {
            return Err(LabError::InvalidArgument(format!(
                "bubble pole must lie outside the closed ball (ρ = {rho})"
            )));
        }
        Ok(Self { amplitude, chart })
    }

    /// The constant function `c`.
    pub fn constant(n: Dimension, amplitude: f64) -> Result<Self> {
        Self::new(amplitude, vec![0.0; n.get()])
    }

    /// `c |y − y₀|^{2−n}` with `|y₀| > 1`.
    pub fn from_pole(amplitude: f64, pole: &[f64]) -> Result<Self> {
        let r2: f64 = pole.iter().map(|v| v * v).sum();
        if !(r2 > 1.0) {
            return Err(LabError::InvalidArgument(format!(
                "pole must satisfy |y₀| > 1 (got {})",
                r2.sqrt()
            )));
        }
        let n = pole.len() as f64;
        let chart = pole.iter().map(|v| v / r2).collect();
        Self::new(amplitude * r2.sqrt().powf(2.0 - n), chart)
    }

    pub fn n(&self) -> usize {
        self.chart.len()
    }

    pub fn rho(&self) -> f64 {
        self.chart.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Pole `y₀ = a/|a|²`, or `None` for the constant.
    pub fn pole(&self) -> Option<Vec<f64>> {
        let r2 = self.rho().powi(2);
        (r2 > 0.0).then(|| self.chart.iter().map(|v| v / r2).collect())
    }

    /// Amplitude of the pole form `c' |y − y₀|^{2−n}`.
    pub fn pole_amplitude(&self) -> Option<f64> {
        let rho = self.rho();
        (rho > 0.0).then(|| self.amplitude * rho.powf(2.0 - self.n() as f64))
    }

    /// Constant `c'` with `c_n ∂_ν u + ĉ_n u = ĉ_n c' u^{n/(n−2)}` on the sphere:
    /// `(1 − ρ²) c^{−2/(n−2)}`, equivalently `(|y₀|² − 1) c_pole^{−2/(n−2)}`.
    pub fn ypb_constant(&self) -> f64 {
        let n = self.n() as f64;
        (1.0 - self.rho().powi(2)) * self.amplitude.powf(-2.0 / (n - 2.0))
    }
}

/// `κ_l = |S^{n−1}| C_l^λ(1) / dim_l`: the generating function of the bubble
/// is `Σ_l κ_l Σ_i R_i(a) Y_i` at amplitude one.
pub fn kappa(n: Dimension, l: usize) -> f64 {
    match n.get() {
        3 => 4.0 * PI / (2 * l + 1) as f64,
        _ => 2.0 * PI * PI / (l + 1) as f64,
    }
}

/// A member of the explicit minimizer family on the ball.
#[derive(Debug, Clone)]
pub struct Bubble {
    n: Dimension,
    params: BubbleParams,
}

pub fn bubble(n: Dimension, params: BubbleParams) -> Result<Bubble> {
    Bubble::new(n, params)
}

impl Bubble {
    pub fn new(n: Dimension, params: BubbleParams) -> Result<Self> {
        if params.n() != n.get() {
            return Err(LabError::SizeMismatch {
                what: "bubble chart point",
                expected: n.get(),
                found: params.n(),
            });
        }
        let params = BubbleParams::new(params.amplitude, params.chart)?;
        Ok(Self { n, params })
    }

    pub fn params(&self) -> &BubbleParams {
        &self.params
    }

    pub fn eval_dual<T: DualNum<Primitive = f64> + Copy>(&self, y: &[T]) -> T {
        let a = &self.params.chart;
        let rho2: f64 = a.iter().map(|v| v * v).sum();
        let mut dot = T::zero();
        let mut y2 = T::zero();
        for (yi, ai) in y.iter().zip(a) {
            dot += *yi * *ai;
            y2 += *yi * *yi;
        }
        let d = T::one() - dot * 2.0 + y2 * rho2;
        d.powf((2.0 - self.n.get() as f64) / 2.0) * self.params.amplitude
    }

    /// Value and outward normal derivative at a point of the unit sphere, closed form.
    pub fn boundary_data(&self, omega: &[f64]) -> (f64, f64) {
        let a = &self.params.chart;
        let rho2: f64 = a.iter().map(|v| v * v).sum();
        let dot: f64 = omega.iter().zip(a).map(|(w, a)| w * a).sum();
        let d = 1.0 - 2.0 * dot + rho2;
        let nf = self.n.get() as f64;
        let c = self.params.amplitude;
        let u = c * d.powf((2.0 - nf) / 2.0);
        let du = c * (nf - 2.0) * d.powf(-nf / 2.0) * (dot - rho2);
        (u, du)
    }

    /// Truncated boundary coefficients `c κ_l R_i(a)`.
    pub fn coefficients(&self, degree: usize) -> BoundaryField {
        let basis = Basis::new(self.n, degree);
        let coeffs = chart_coefficients(&basis, &self.params.chart, self.params.amplitude);
        BoundaryField {
            n: self.n,
            degree,
            coeffs,
        }
    }

    fn exact_grid(&self) -> QuadratureGrid {
        let rho = self.params.rho();
        let degree = if rho < 1e-3 {
            24
        } else {
            ((1e-14f64).ln() / rho.ln()).ceil() as usize + 20
        };
        let cap = if self.n.get() == 3 { 600 } else { 160 };
        QuadratureGrid::new(self.n, degree.min(cap))
    }

    /// `Q̃` of the untruncated bubble from closed-form samples:
    /// `∫ u (c_n ∂_r u + ĉ_n u) / (∫ u^p)^{2/p}`.
    pub fn exact_qtilde(&self) -> f64 {
        let grid = self.exact_grid();
        let (num, mass) = self.exact_integrals(&grid);
        num * mass.powf(-2.0 / self.n.trace_exponent())
    }

    fn exact_integrals(&self, grid: &QuadratureGrid) -> (f64, f64) {
        let p = self.n.trace_exponent();
        let (mut num, mut mass) = (0.0, 0.0);
        for (x, w) in grid.iter_nodes().zip(&grid.weights) {
            let (u, du) = self.boundary_data(x);
            num += w * u * (self.n.c_n() * du + self.n.c_hat() * u);
            mass += w * u.powf(p);
        }
        (num, mass)
    }

    /// Exact L² gradient of `Q̃` at the untruncated bubble, projected on degree `≤ degree`.
    pub fn exact_gradient(&self, degree: usize) -> DVector<f64> {
        let grid = self.exact_grid();
        let basis = Basis::new(self.n, degree);
        let p = self.n.trace_exponent();
        let (num, mass) = self.exact_integrals(&grid);
        let alpha = mass.powf(-2.0 / p);
        let beta = alpha / mass;
        let mut g = DVector::zeros(basis.len());
        for (x, w) in grid.iter_nodes().zip(&grid.weights) {
            let (u, du) = self.boundary_data(x);
            let f = 2.0 * alpha * (self.n.c_n() * du + self.n.c_hat() * u) - 2.0 * num * beta * u.powf(p - 1.0);
            for (gi, y) in g.iter_mut().zip(basis.eval(x)) {
                *gi += w * f * y;
            }
        }
        g
    }

    /// L² norm on the sphere of `c_n ∂_ν u + ĉ_n u − ĉ_n c' u^{n/(n−2)}` (`u` is harmonic inside).
    pub fn residual_ypb(&self, c: f64) -> f64 {
        let grid = self.exact_grid();
        let p = self.n.trace_exponent();
        grid.iter_nodes()
            .zip(&grid.weights)
            .map(|(x, w)| {
                let (u, du) = self.boundary_data(x);
                let r = self.n.c_n() * du + self.n.c_hat() * u - self.n.c_hat() * c * u.powf(p - 1.0);
                w * r * r
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl BallFunction for Bubble {
    fn n(&self) -> Dimension {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval_dual(x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        dual_gradient(x, |p: &[Dual64]| self.eval_dual(p))
    }
}

/// `c κ_l R_i(a)` for all basis functions; generic so chart derivatives come from duals.
pub fn chart_coefficients_dual<T: DualNum<Primitive = f64> + Copy>(basis: &Basis, a: &[T], amplitude: T) -> Vec<T> {
    let n = basis.dimension();
    basis
        .eval_solid(a)
        .into_iter()
        .zip(basis.indices())
        .map(|(r, ix)| r * amplitude * kappa(n, ix.l))
        .collect()
}

pub fn chart_coefficients(basis: &Basis, a: &[f64], amplitude: f64) -> DVector<f64> {
    DVector::from_vec(chart_coefficients_dual(basis, a, amplitude))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Functional;
    use crate::geometry::flat_ball;
    use crate::operators::{h_half_norm, InteriorField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn pole_and_chart_forms_agree() {
        let y0 = [0.0, 0.0, 2.0];
        let p = BubbleParams::from_pole(1.3, &y0).unwrap();
        let b = Bubble::new(dim(3), p.clone()).unwrap();
        let y = [0.1, -0.3, 0.5];
        let direct = 1.3 / ((0.1f64).powi(2) + 0.09 + 1.5f64.powi(2)).sqrt();
        assert!((b.value(&y) - direct).abs() < 1e-14);
        let pole = p.pole().unwrap();
        assert!((pole[2] - 2.0).abs() < 1e-15);
        assert!((p.pole_amplitude().unwrap() - 1.3).abs() < 1e-14);
        // (|y₀|² − 1) c_pole^{−2/(n−2)} equals the chart form of the constant.
        assert!((p.ypb_constant() - 3.0 / 1.3f64.powi(2)).abs() < 1e-13);
        assert!(BubbleParams::from_pole(1.0, &[0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn constant_member() {
        let c = (4.0 * PI).powf(-0.25);
        let b = Bubble::new(dim(3), BubbleParams::constant(dim(3), c).unwrap()).unwrap();
        let f = b.coefficients(3);
        assert!((f.coeffs[0] - c * (4.0 * PI).sqrt()).abs() < 1e-14);
        assert!(f.coeffs.iter().skip(1).all(|v| *v == 0.0));
    }

    #[test]
    fn coefficients_match_quadrature_projection() {
        for n in [3, 4] {
            let d = dim(n);
            let chart: Vec<f64> = [0.2, -0.1, 0.15, 0.05][..n].to_vec();
            let b = Bubble::new(d, BubbleParams::new(0.8, chart).unwrap()).unwrap();
            let basis = Basis::new(d, 6);
            let grid = QuadratureGrid::new(d, 80);
            let mut proj = DVector::zeros(basis.len());
            for (x, w) in grid.iter_nodes().zip(&grid.weights) {
                let u = b.boundary_data(x).0;
                for (pi, y) in proj.iter_mut().zip(basis.eval(x)) {
                    *pi += w * u * y;
                }
            }
            let closed = b.coefficients(6).coeffs;
            assert!((proj - closed).abs().max() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn normal_derivative_matches_duals() {
        let b = Bubble::new(dim(4), BubbleParams::from_pole(1.0, &[0.0, 1.5, 0.5, -1.0]).unwrap()).unwrap();
        let omega = [0.5, 0.5, 0.5, 0.5];
        let (u, du) = b.boundary_data(&omega);
        let (v, dv) = b.value_and_radial(&omega);
        assert!((u - v).abs() < 1e-14 && (du - dv).abs() < 1e-13);
    }

    #[test]
    fn solves_boundary_problem() {
        let p = BubbleParams::from_pole(1.0, &[0.0, 0.0, 2.0]).unwrap();
        let b = Bubble::new(dim(3), p.clone()).unwrap();
        assert!(b.residual_ypb(p.ypb_constant()) < 1e-8);
        assert!(b.residual_ypb(1.1 * p.ypb_constant()) > 0.1);
    }

    #[test]
    fn exact_quotient_is_sharp_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let target = 8.0 * PI.sqrt();
        for _ in 0..20 {
            let r = rng.random_range(1.2..10.0);
            let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let pole: Vec<f64> = dir.iter().map(|v| v / norm * r).collect();
            let b = Bubble::new(dim(3), BubbleParams::from_pole(1.0, &pole).unwrap()).unwrap();
            assert!((b.exact_qtilde() - target).abs() < 1e-8);
        }
    }

    #[test]
    fn family_is_critical() {
        let f = Functional::new(&flat_ball(3).unwrap(), 16).unwrap();
        for pole in [[0.0, 0.0, 5.0], [3.0, -2.0, 1.0], [0.0, 4.0, 0.0]] {
            let b = Bubble::new(dim(3), BubbleParams::from_pole(1.0, &pole).unwrap()).unwrap();
            assert!(b.exact_gradient(16).norm() < 1e-8);
            let s = f.normalize_p(&b.coefficients(16)).unwrap();
            assert!(f.grad_qtilde(&s).unwrap().l2_norm() < 1e-8);
        }
    }

    #[test]
    fn truncated_bubble_residual() {
        let f = Functional::new(&flat_ball(3).unwrap(), 16).unwrap();
        let b = Bubble::new(dim(3), BubbleParams::from_pole(1.0, &[0.0, 0.0, 6.0]).unwrap()).unwrap();
        let u = InteriorField::harmonic(b.coefficients(16));
        assert!(f.residual_ypb(&u, b.params().ypb_constant()).unwrap() < 1e-8);
    }

    #[test]
    fn linear_approach_to_constant() {
        let d = dim(3);
        let c0 = Bubble::new(d, BubbleParams::constant(d, 1.0).unwrap()).unwrap().coefficients(8);
        let mut prev: Option<f64> = None;
        for rho in [0.1, 0.05, 0.01] {
            let b = Bubble::new(d, BubbleParams::new(1.0, vec![0.0, rho, 0.0]).unwrap()).unwrap();
            let dist = h_half_norm(&b.coefficients(8).axpy(-1.0, &c0));
            let ratio = dist / rho;
            if let Some(p) = prev {
                assert!((ratio / p - 1.0f64).abs() < 0.1);
            }
            prev = Some(ratio);
        }
    }
}
