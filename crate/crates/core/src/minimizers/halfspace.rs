use std::f64::consts::PI;

use num_dual::{Dual64, DualNum};

use crate::dimension::Dimension;
use crate::harmonics::{gauss_legendre_interval, QuadratureGrid};
use crate::operators::BallFunction;

/// Conformal map from the upper half-space onto the ball,
/// `(x, t) ↦ (2x, 1 − t² − |x|²) / ((1+t)² + |x|²)`.
///
/// The boundary plane goes to the unit sphere, the origin to the pole `e_n`.
pub fn cayley_inverse<T: DualNum<Primitive = f64> + Copy>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let t = x[n - 1];
    let mut r2 = T::zero();
    for v in &x[..n - 1] {
        r2 += *v * *v;
    }
    let d = (t + 1.0) * (t + 1.0) + r2;
    let mut out: Vec<T> = x[..n - 1].iter().map(|v| *v * 2.0 / d).collect();
    out.push((T::one() - t * t - r2) / d);
    out
}

/// Pushforward weight `2^{(n−2)/2} ((1+t)² + |x|²)^{(2−n)/2}`.
pub fn halfspace_weight<T: DualNum<Primitive = f64> + Copy>(x: &[T]) -> T {
    let n = x.len();
    let nf = n as f64;
    let t = x[n - 1];
    let mut d = (t + 1.0) * (t + 1.0);
    for v in &x[..n - 1] {
        d += *v * *v;
    }
    d.powf((2.0 - nf) / 2.0) * 2f64.powf((nf - 2.0) / 2.0)
}

/// `φ̄ = W · (φ ∘ F⁻¹)` on the closed upper half-space.
pub struct HalfspaceTransfer<'a> {
    phi: &'a dyn BallFunction,
}

pub fn halfspace_transfer(phi: &dyn BallFunction) -> HalfspaceTransfer<'_> {
    HalfspaceTransfer { phi }
}

impl HalfspaceTransfer<'_> {
    pub fn value(&self, x: &[f64]) -> f64 {
        halfspace_weight(x) * self.phi.value(&cayley_inverse(x))
    }

    /// Value and Euclidean gradient via the chain rule; the map and weight are differentiated with duals.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        let y = cayley_inverse(x);
        let (phi, dphi) = self.phi.value_and_gradient(&y);
        let mut weight = 0.0;
        let mut grad = vec![0.0; n];
        for d in 0..n {
            let seeded: Vec<Dual64> = x
                .iter()
                .enumerate()
                .map(|(j, v)| Dual64::new(*v, if j == d { 1.0 } else { 0.0 }))
                .collect();
            let w = halfspace_weight(&seeded);
            let map = cayley_inverse(&seeded);
            weight = w.re;
            let chain: f64 = map.iter().zip(&dphi).map(|(m, g)| m.eps * g).sum();
            grad[d] = w.eps * phi;
            grad[d] += w.re * chain;
        }
        (weight * phi, grad)
    }
}

/// Half-space extremal `c (ε / ((ε+t)² + |x−x₀|²))^{(n−2)/2}`.
pub fn halfspace_bubble(n: Dimension, amplitude: f64, eps: f64, center: &[f64], x: &[f64]) -> f64 {
    let nf = n.get() as f64;
    let t = x[n.get() - 1];
    let r2: f64 = x[..n.get() - 1].iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
    amplitude * (eps / ((eps + t).powi(2) + r2)).powf((nf - 2.0) / 2.0)
}

/// Tensor rule on the upper half-space and its boundary plane.
///
/// Radii are compactified by `R = tan α` with Gauss–Legendre nodes in `α ∈ (0, π/2)`,
/// so algebraically decaying integrands converge spectrally without truncation.
#[derive(Debug, Clone)]
pub struct HalfspaceQuadrature {
    pub n: Dimension,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub plane_points: Vec<f64>,
    pub plane_weights: Vec<f64>,
}

impl HalfspaceQuadrature {
    /// `radial` nodes in `α`, `polar` nodes in the angle from the `t` axis, and an
    /// equator rule with `equator` nodes per dimension.
    pub fn new(n: Dimension, radial: usize, polar: usize, equator: usize) -> Self {
        let nn = n.get();
        let nf = nn as f64;
        // Rule on the equatorial sphere S^{n−2}.
        let (eq_nodes, eq_weights): (Vec<Vec<f64>>, Vec<f64>) = if nn == 3 {
            (0..equator)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / equator as f64;
                    (vec![phi.cos(), phi.sin()], 2.0 * PI / equator as f64)
                })
                .unzip()
        } else {
            let g = QuadratureGrid::new(Dimension::new(3).expect("valid"), equator);
            (g.iter_nodes().map(|x| x.to_vec()).collect(), g.weights.clone())
        };
        let (alpha, wa) = gauss_legendre_interval(radial, 0.0, PI / 2.0);
        let (chi, wc) = gauss_legendre_interval(polar, 0.0, PI / 2.0);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut plane_points = Vec::new();
        let mut plane_weights = Vec::new();
        for (a, wa) in alpha.iter().zip(&wa) {
            let r = a.tan();
            let sec2 = 1.0 / a.cos().powi(2);
            for (omega, we) in eq_nodes.iter().zip(&eq_weights) {
                for (c, wc) in chi.iter().zip(&wc) {
                    let (s, co) = c.sin_cos();
                    points.extend(omega.iter().map(|o| r * s * o));
                    points.push(r * co);
                    weights.push(wa * we * wc * r.powf(nf - 1.0) * sec2 * s.powf(nf - 2.0));
                }
                plane_points.extend(omega.iter().map(|o| r * o));
                plane_points.push(0.0);
                plane_weights.push(wa * we * r.powf(nf - 2.0) * sec2);
            }
        }
        Self {
            n,
            points,
            weights,
            plane_points,
            plane_weights,
        }
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        use rayon::prelude::*;
        self.points
            .par_chunks_exact(self.n.get())
            .zip(self.weights.par_iter())
            .map(|(x, w)| w * f(x))
            .sum()
    }

    pub fn integrate_plane(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        use rayon::prelude::*;
        self.plane_points
            .par_chunks_exact(self.n.get())
            .zip(self.plane_weights.par_iter())
            .map(|(x, w)| w * f(x))
            .sum()
    }
}
