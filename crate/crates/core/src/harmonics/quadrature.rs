//! One-dimensional Gauss rules and product quadrature on `S^2` and `S^3`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{LabError, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(count, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(count, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[count - 1 - i] = -x;
        weights[count - 1 - i] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(count: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(count);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|wi| wi * half).collect(),
    )
}

/// Gauss rule for `∫_{-1}^{1} f(t) sqrt(1 - t^2) dt` (Chebyshev of the second kind).
pub fn gauss_chebyshev_second(count: usize) -> (Vec<f64>, Vec<f64>) {
    let h = PI / (count as f64 + 1.0);
    (1..=count)
        .rev()
        .map(|k| {
            let s = (k as f64 * h).sin();
            ((k as f64 * h).cos(), h * s * s)
        })
        .unzip()
}

/// Product quadrature rule on the unit sphere `S^{n-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub n: Dimension,
    /// Node coordinates, stored row-major with stride `n`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// All spherical polynomials of degree at most this value integrate exactly.
    pub exact_degree: usize,
}

impl QuadratureGrid {
    /// Builds a rule exact for spherical polynomials of degree `target_degree`.
    ///
    /// For `n = 3` this is Gauss–Legendre in the polar cosine times a uniform
    /// azimuthal rule; for `n = 4` a Chebyshev-U rule in `x_4` is added on top of
    /// the `S^2` rule.
    pub fn new(n: Dimension, target_degree: usize) -> Self {
        let polar = target_degree / 2 + 1;
        let azimuth = target_degree + 1;
        let (s2_nodes, s2_weights) = sphere2_rule(polar, azimuth);
        match n.get() {
            3 => Self {
                n,
                nodes: s2_nodes,
                weights: s2_weights,
                exact_degree: target_degree,
            },
            _ => {
                let (t, wt) = gauss_chebyshev_second(target_degree / 2 + 1);
                let count = s2_weights.len();
                let mut nodes = Vec::with_capacity(4 * t.len() * count);
                let mut weights = Vec::with_capacity(t.len() * count);
                for (ti, wti) in t.iter().zip(&wt) {
                    let s = (1.0 - ti * ti).max(0.0).sqrt();
                    for j in 0..count {
                        let w = &s2_nodes[3 * j..3 * j + 3];
                        nodes.extend_from_slice(&[s * w[0], s * w[1], s * w[2], *ti]);
                        weights.push(wti * s2_weights[j]);
                    }
                }
                Self {
                    n,
                    nodes,
                    weights,
                    exact_degree: target_degree,
                }
            }
        }
    }

    /// Grid for a degree-`degree` basis with the default exactness target
    /// (`4L` for n = 3, `3L` for n = 4) so every functional evaluation is exact.
    pub fn for_degree(n: Dimension, degree: usize) -> Self {
        Self::new(n, default_target(n, degree))
    }

    /// Validated constructor with the `target_degree >= 2L` precondition.
    pub fn with_target(n: Dimension, degree: usize, target_degree: usize) -> Result<Self> {
        if target_degree < 2 * degree {
            return Err(LabError::InvalidArgument(format!(
                "quadrature target degree {target_degree} below 2L = {}",
                2 * degree
            )));
        }
        Ok(Self::new(n, target_degree))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let n = self.n.get();
        &self.nodes[n * i..n * (i + 1)]
    }

    pub fn iter_nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.n.get())
    }

    /// Weighted sum of nodal samples.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.len());
        samples.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }
}

/// Default exactness degree for fields of degree `degree`.
pub fn default_target(n: Dimension, degree: usize) -> usize {
    match n.get() {
        3 => 4 * degree,
        _ => 3 * degree,
    }
}

fn sphere2_rule(polar: usize, azimuth: usize) -> (Vec<f64>, Vec<f64>) {
    let (z, wz) = gauss_legendre(polar);
    let dphi = 2.0 * PI / azimuth as f64;
    let mut nodes = Vec::with_capacity(3 * polar * azimuth);
    let mut weights = Vec::with_capacity(polar * azimuth);
    for (zi, wzi) in z.iter().zip(&wz) {
        let s = (1.0 - zi * zi).max(0.0).sqrt();
        for j in 0..azimuth {
            let phi = (j as f64 + 0.5) * dphi;
            nodes.extend_from_slice(&[s * phi.cos(), s * phi.sin(), *zi]);
            weights.push(wzi * dphi);
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for k in 0..=13 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k = {k}: {q} vs {exact}");
        }
    }

    #[test]
    fn chebyshev_rule_integrates_polynomials() {
        let (t, w) = gauss_chebyshev_second(5);
        let total: f64 = w.iter().sum();
        assert!((total - PI / 2.0).abs() < 1e-14);
        let second: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        assert!((second - PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        for n in [3, 4] {
            let d = Dimension::new(n).unwrap();
            let g = QuadratureGrid::new(d, 16);
            let total: f64 = g.weights.iter().sum();
            assert!((total - d.sphere_area()).abs() < 1e-12);
            assert!(g.weights.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn grid_sizes_for_degree_sixteen() {
        let g = QuadratureGrid::new(Dimension::new(3).unwrap(), 16);
        assert_eq!(g.len(), 9 * 17);
    }

    #[test]
    fn nodes_lie_on_sphere() {
        let g = QuadratureGrid::new(Dimension::new(4).unwrap(), 6);
        for x in g.iter_nodes() {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            assert!((r2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn target_precondition() {
        let d = Dimension::new(3).unwrap();
        assert!(QuadratureGrid::with_target(d, 4, 7).is_err());
        assert!(QuadratureGrid::with_target(d, 4, 8).is_ok());
    }
}
