//! Dirichlet-to-Neumann map, harmonic extension, Sobolev norms and energy forms.

mod dtn;
mod extension;
mod interior;

pub use dtn::{dtn_eigenvalues, dtn_matrix, h_half_norm, h_half_weights, SpectralOperator};
pub use extension::{harmonic_extend, BallFunction, BallQuadrature, Difference, HarmonicExtension, Product};
pub use interior::{energy_form, h1_norm, InteriorEvaluator, InteriorField};

pub(crate) use extension::dual_gradient;
