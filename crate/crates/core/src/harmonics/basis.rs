//! Real orthonormal spherical harmonics on `S^2` and `S^3`, evaluated as solid
//! (homogeneous harmonic) polynomials so that the same routine gives boundary
//! values, harmonic extensions and exact gradients.

use std::f64::consts::PI;

use num_dual::DualNum;
use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{LabError, Result};

/// Multi-index of a basis function.
///
/// For `n = 3` only `(l, m)` is meaningful and `k = l`. For `n = 4`, `k ≤ l` is
/// the degree of the embedded `S^2` harmonic and `|m| ≤ k` its order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HarmonicIndex {
    pub l: usize,
    pub k: usize,
    pub m: i64,
}

/// Truncated real harmonic basis of degree `≤ L`, ordered by `l`, then `k`, then `m`.
#[derive(Debug, Clone)]
pub struct Basis {
    n: Dimension,
    degree: usize,
    indices: Vec<HarmonicIndex>,
    norms: Vec<f64>,
}

impl Basis {
    pub fn new(n: Dimension, degree: usize) -> Self {
        let mut indices = Vec::with_capacity(n.basis_size(degree));
        let mut norms = Vec::with_capacity(n.basis_size(degree));
        for l in 0..=degree {
            match n.get() {
                3 => {
                    for m in -(l as i64)..=(l as i64) {
                        indices.push(HarmonicIndex { l, k: l, m });
                        norms.push(s2_norm(l, m));
                    }
                }
                _ => {
                    for k in 0..=l {
                        for m in -(k as i64)..=(k as i64) {
                            indices.push(HarmonicIndex { l, k, m });
                            norms.push(s2_norm(k, m) * gegenbauer_norm(l - k, k));
                        }
                    }
                }
            }
        }
        Self {
            n,
            degree,
            indices,
            norms,
        }
    }

    pub fn dimension(&self) -> Dimension {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[HarmonicIndex] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> HarmonicIndex {
        self.indices[i]
    }

    /// Harmonic degree of each basis function.
    pub fn degrees(&self) -> Vec<usize> {
        self.indices.iter().map(|ix| ix.l).collect()
    }

    /// Flat position of `(l, m)` for `n = 3`.
    pub fn position(&self, l: usize, m: i64) -> Option<usize> {
        self.position_full(l, l, m)
    }

    /// Flat position of `(l, k, m)`; for `n = 3` pass `k = l`.
    pub fn position_full(&self, l: usize, k: usize, m: i64) -> Option<usize> {
        if l > self.degree || k > l || m.unsigned_abs() as usize > k {
            return None;
        }
        let offset = self.n.basis_size(l) - self.n.multiplicity(l);
        let within = match self.n.get() {
            3 => (m + l as i64) as usize,
            _ => k * k + (m + k as i64) as usize,
        };
        Some(offset + within)
    }

    /// Positions of all basis functions of exact degree `l`.
    pub fn degree_range(&self, l: usize) -> std::ops::Range<usize> {
        let end = self.n.basis_size(l);
        end - self.n.multiplicity(l)..end
    }

    /// Values of all solid harmonics `r^l Y_i(x/r)` at an arbitrary point of `R^n`.
    pub fn eval_solid<T: DualNum<Primitive = f64> + Copy>(&self, x: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        match self.n.get() {
            3 => {
                let table = SolidTable3::new(x[0], x[1], x[2], self.degree);
                for (ix, norm) in self.indices.iter().zip(&self.norms) {
                    out.push(table.get(ix.l, ix.m) * *norm);
                }
            }
            _ => {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
                let table = SolidTable3::new(x[0], x[1], x[2], self.degree);
                let gegen: Vec<Vec<T>> = (0..=self.degree)
                    .map(|k| gegenbauer_solid(x[3], r2, k as f64 + 1.0, self.degree - k))
                    .collect();
                for (ix, norm) in self.indices.iter().zip(&self.norms) {
                    out.push(gegen[ix.k][ix.l - ix.k] * table.get(ix.k, ix.m) * *norm);
                }
            }
        }
        out
    }

    /// Plain `f64` values at a point (on the sphere these are the `Y_i`).
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.eval_solid(x)
    }
}

/// Normalization of the real `S^2` harmonic built from `Q_l^m` and `C_m`/`S_m`.
fn s2_norm(l: usize, m: i64) -> f64 {
    let am = m.unsigned_abs() as usize;
    let ratio: f64 = ((l - am + 1)..=(l + am)).map(|j| 1.0 / j as f64).product();
    let base = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
    if m == 0 {
        base
    } else {
        base * 2f64.sqrt()
    }
}

/// `1/sqrt(h)` for the Gegenbauer polynomial `C_j^{(k+1)}` with weight `(1-t^2)^{k+1/2}`.
fn gegenbauer_norm(j: usize, k: usize) -> f64 {
    let mut h = PI * 2f64.powi(-(2 * k as i32) - 1) / (j + k + 1) as f64;
    // (j+2k+1)! / (j! (k!)^2)
    for t in (j + 1)..=(j + 2 * k + 1) {
        h *= t as f64;
    }
    for t in 1..=k {
        h /= (t * t) as f64;
    }
    1.0 / h.sqrt()
}

/// Homogeneous Gegenbauer polynomials `r^j C_j^λ(t/r)` for `j = 0..=jmax`.
fn gegenbauer_solid<T: DualNum<Primitive = f64> + Copy>(t: T, r2: T, lambda: f64, jmax: usize) -> Vec<T> {
    let mut g = Vec::with_capacity(jmax + 1);
    g.push(T::one());
    if jmax >= 1 {
        g.push(t * (2.0 * lambda));
    }
    for j in 2..=jmax {
        let jf = j as f64;
        let next = (t * g[j - 1] * (2.0 * (jf + lambda - 1.0)) - r2 * g[j - 2] * (jf + 2.0 * lambda - 2.0)) / jf;
        g.push(next);
    }
    g
}

/// Unnormalized solid harmonics in three variables, `Q_l^m(z, r^2) · C_m` or `· S_m`.
struct SolidTable3<T> {
    // values[l][m + l]
    values: Vec<Vec<T>>,
}

impl<T: DualNum<Primitive = f64> + Copy> SolidTable3<T> {
    fn new(x: T, y: T, z: T, degree: usize) -> Self {
        let r2 = x * x + y * y + z * z;
        // C_m + i S_m = (x + i y)^m
        let mut c = vec![T::one()];
        let mut s = vec![T::zero()];
        for m in 1..=degree {
            let (cp, sp) = (c[m - 1], s[m - 1]);
            c.push(cp * x - sp * y);
            s.push(cp * y + sp * x);
        }
        let mut values: Vec<Vec<T>> = (0..=degree).map(|l| vec![T::zero(); 2 * l + 1]).collect();
        for m in 0..=degree {
            // Q_l^m for l = m..=degree
            let mut q: Vec<T> = Vec::with_capacity(degree + 1 - m);
            let dfact: f64 = (1..=m).map(|j| (2 * j - 1) as f64).product();
            q.push(T::from(dfact));
            if m < degree {
                q.push(z * q[0] * (2 * m + 1) as f64);
            }
            for l in (m + 2)..=degree {
                let a = (2 * l - 1) as f64;
                let b = (l + m - 1) as f64;
                let next = (z * q[l - m - 1] * a - r2 * q[l - m - 2] * b) / (l - m) as f64;
                q.push(next);
            }
            for l in m..=degree {
                let ql = q[l - m];
                values[l][l + m] = ql * c[m];
                if m > 0 {
                    values[l][l - m] = ql * s[m];
                }
            }
        }
        Self { values }
    }

    fn get(&self, l: usize, m: i64) -> T {
        self.values[l][(m + l as i64) as usize]
    }
}

/// Validated basis constructor.
pub fn build_basis(n: usize, degree: usize) -> Result<Basis> {
    let n = Dimension::new(n)?;
    Ok(Basis::new(n, degree))
}

/// Checks that two bases describe the same space.
pub(crate) fn check_compatible(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LabError::SizeMismatch {
            what,
            expected,
            found,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_dual::Dual64;

    #[test]
    fn dimensions() {
        assert_eq!(build_basis(3, 2).unwrap().len(), 9);
        assert_eq!(build_basis(3, 0).unwrap().len(), 1);
        assert_eq!(build_basis(4, 1).unwrap().len(), 5);
        assert!(build_basis(5, 1).is_err());
    }

    #[test]
    fn constant_value() {
        let b = build_basis(3, 0).unwrap();
        let y = b.eval(&[0.3, -0.2, (1.0f64 - 0.13).sqrt()]);
        assert!((y[0] - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
        let b4 = build_basis(4, 0).unwrap();
        let y4 = b4.eval(&[0.0, 0.0, 0.0, 1.0]);
        assert!((y4[0] - (2.0 * PI * PI).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn positions_match_indices() {
        for n in [3, 4] {
            let b = build_basis(n, 5).unwrap();
            for (i, ix) in b.indices().iter().enumerate() {
                assert_eq!(b.position_full(ix.l, ix.k, ix.m), Some(i));
            }
        }
    }

    #[test]
    fn solid_harmonics_are_harmonic() {
        // Laplacian by nested forward differences of the dual gradient.
        for n in [3usize, 4] {
            let b = build_basis(n, 6).unwrap();
            let x: Vec<f64> = [0.31, -0.22, 0.45, 0.17][..n].to_vec();
            let mut lap = vec![0.0; b.len()];
            let h = 1e-4;
            for d in 0..n {
                let grad_at = |shift: f64| {
                    let pt: Vec<Dual64> = (0..n)
                        .map(|j| {
                            let v = x[j] + if j == d { shift } else { 0.0 };
                            if j == d {
                                Dual64::new(v, 1.0)
                            } else {
                                Dual64::from(v)
                            }
                        })
                        .collect();
                    b.eval_solid(&pt).iter().map(|v| v.eps).collect::<Vec<f64>>()
                };
                let (gp, gm) = (grad_at(h), grad_at(-h));
                for i in 0..b.len() {
                    lap[i] += (gp[i] - gm[i]) / (2.0 * h);
                }
            }
            assert!(lap.iter().all(|v| v.abs() < 1e-6), "n = {n}: {lap:?}");
        }
    }

    #[test]
    fn homogeneous_of_degree_l() {
        let b = build_basis(4, 4).unwrap();
        let x = [0.2, 0.4, -0.1, 0.3];
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let (y1, y2) = (b.eval(&x), b.eval(&x2));
        for (i, ix) in b.indices().iter().enumerate() {
            assert!((y2[i] - 2f64.powi(ix.l as i32) * y1[i]).abs() < 1e-12);
        }
    }
}
