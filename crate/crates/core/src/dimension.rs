//! Ambient dimension of the ball and the constants of the boundary Yamabe problem.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Dimension `n` of the ball `B^n`; the boundary sphere is `S^{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub const SUPPORTED: [usize; 2] = [3, 4];

    pub fn new(n: usize) -> Result<Self> {
        if Self::SUPPORTED.contains(&n) {
            Ok(Self(n))
        } else {
            Err(LabError::UnsupportedDimension { n })
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    fn nf(self) -> f64 {
        self.0 as f64
    }

    /// Gradient coefficient `c_n = 4(n-1)/(n-2)` of the conformal Laplacian.
    pub fn c_n(self) -> f64 {
        4.0 * (self.nf() - 1.0) / (self.nf() - 2.0)
    }

    /// Boundary mean-curvature coefficient `2(n-1)`.
    pub fn c_hat(self) -> f64 {
        2.0 * (self.nf() - 1.0)
    }

    /// Critical trace exponent `p = 2(n-1)/(n-2)`.
    pub fn trace_exponent(self) -> f64 {
        2.0 * (self.nf() - 1.0) / (self.nf() - 2.0)
    }

    /// Integer form of the trace exponent (4 for n = 3, 3 for n = 4).
    pub fn trace_exponent_int(self) -> i32 {
        match self.0 {
            3 => 4,
            _ => 3,
        }
    }

    /// Critical interior Sobolev exponent `2n/(n-2)`.
    pub fn sobolev_exponent(self) -> f64 {
        2.0 * self.nf() / (self.nf() - 2.0)
    }

    /// Area of the unit sphere `S^{n-1}`.
    pub fn sphere_area(self) -> f64 {
        match self.0 {
            3 => 4.0 * PI,
            _ => 2.0 * PI * PI,
        }
    }

    /// Volume of the unit ball `B^n`.
    pub fn ball_volume(self) -> f64 {
        self.sphere_area() / self.nf()
    }

    /// Closed-form minimum `2(n-1) |S^{n-1}|^{1/(n-1)}` of the quotient on the flat ball.
    pub fn ball_sobolev_quotient(self) -> f64 {
        self.c_hat() * self.sphere_area().powf(1.0 / (self.nf() - 1.0))
    }

    /// Number of real spherical harmonics of exact degree `l` on `S^{n-1}`.
    pub fn multiplicity(self, l: usize) -> usize {
        match self.0 {
            3 => 2 * l + 1,
            _ => (l + 1) * (l + 1),
        }
    }

    /// Total number of harmonics of degree at most `degree`.
    pub fn basis_size(self, degree: usize) -> usize {
        (0..=degree).map(|l| self.multiplicity(l)).sum()
    }

    /// Eigenvalue `l(l+n-2)` of `-Δ` on `S^{n-1}`.
    pub fn laplace_eigenvalue(self, l: usize) -> f64 {
        let l = l as f64;
        l * (l + self.nf() - 2.0)
    }
}

impl TryFrom<usize> for Dimension {
    type Error = LabError;

    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_n3() {
        let d = Dimension::new(3).unwrap();
        assert_eq!(d.c_n(), 8.0);
        assert_eq!(d.c_hat(), 4.0);
        assert_eq!(d.trace_exponent(), 4.0);
        assert_eq!(d.sobolev_exponent(), 6.0);
        assert!((d.ball_sobolev_quotient() - 8.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn constants_n4() {
        let d = Dimension::new(4).unwrap();
        assert_eq!(d.c_n(), 6.0);
        assert_eq!(d.c_hat(), 6.0);
        assert_eq!(d.trace_exponent(), 3.0);
        assert_eq!(d.basis_size(1), 5);
    }

    #[test]
    fn rejects_other_dimensions() {
        let err = Dimension::new(5).unwrap_err();
        assert!(err.to_string().contains("{3, 4}"));
    }
}
