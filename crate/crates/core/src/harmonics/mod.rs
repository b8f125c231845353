//! Spherical-harmonic discretization of boundary data.

mod basis;
mod field;
mod quadrature;
mod transform;

pub use basis::{build_basis, Basis, HarmonicIndex};
pub use field::BoundaryField;
pub use quadrature::{
    default_target, gauss_chebyshev_second, gauss_legendre, gauss_legendre_interval, QuadratureGrid,
};
pub use transform::{analyze, integrate_boundary, quadrature_grid, synthesize, Spectral};

pub(crate) use basis::check_compatible;
