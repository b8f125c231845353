//! Spectral laboratory for the boundary Yamabe (Escobar) quotient on the unit ball.
//!
//! Boundary data live in a truncated real spherical-harmonic basis on `S^{n-1}`
//! (`n = 3, 4`), on which the quotient, its derivatives, the explicit minimizer
//! family and the Lyapunov–Schmidt reduction are all evaluated exactly up to
//! quadrature roundoff.

pub mod dimension;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod harmonics;
pub mod harness;
pub mod minimizers;
pub mod operators;
pub mod optim;
pub mod reduction;

pub use dimension::Dimension;
pub use error::{LabError, Result};
