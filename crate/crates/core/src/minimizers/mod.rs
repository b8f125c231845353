//! The explicit minimizer family on the ball, the half-space transfer and distances to the family.

mod bubble;
mod conformal;
mod distance;
mod halfspace;

pub use bubble::{bubble, chart_coefficients, chart_coefficients_dual, kappa, Bubble, BubbleParams};
pub use conformal::{conformal_distance, ConformalVariant};
pub use distance::{distance_to_family, distance_to_family_with, DistanceInput, DistanceOptions, DistanceReport, NormTag};
pub use halfspace::{cayley_inverse, halfspace_bubble, halfspace_transfer, halfspace_weight, HalfspaceQuadrature, HalfspaceTransfer};
