use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::ModelGeometry;
use crate::operators::{BallFunction, BallQuadrature, HarmonicExtension};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConformalVariant {
    /// `(∫ |δ|^{2n/(n−2)} dV_g)^{(n−2)/2n}`.
    Lp,
    /// `(∫ c_n |∇_g δ|² dV_g + ĉ_n ∫ h_g δ² dσ_g)^{1/2}`; the scalar curvature term vanishes.
    Energy,
}

/// Distance between the conformal metrics `u₁^{4/(n−2)} g` and `u₂^{4/(n−2)} g`.
///
/// With `g = w^{4/(n−2)} δ` every term is written against flat measures:
/// `dV_g = w^{2n/(n−2)} dx`, `|∇_g δ|² dV_g = w² |∇δ|² dx` and `h_g dσ_g = w (2/(n−2) ∂_r w + w) dσ`.
pub fn conformal_distance(
    geom: &ModelGeometry,
    u1: &dyn BallFunction,
    u2: &dyn BallFunction,
    variant: ConformalVariant,
    quad: &BallQuadrature,
) -> Result<f64> {
    let n = geom.n();
    if u1.n() != n || u2.n() != n || quad.n != n {
        return Err(LabError::InvalidArgument("conformal_distance dimensions differ".into()));
    }
    let nf = n.get() as f64;
    let w = geom.conformal_factor().map(HarmonicExtension::new);
    match variant {
        ConformalVariant::Lp => {
            let q = 2.0 * nf / (nf - 2.0);
            let integral = quad.integrate(|x| {
                let d = u1.value(x) - u2.value(x);
                let scale = w.as_ref().map_or(1.0, |w| w.value(x));
                (scale * d).abs().powf(q)
            });
            Ok(integral.powf(1.0 / q))
        }
        ConformalVariant::Energy => {
            let bulk = quad.integrate(|x| {
                let (_, g1) = u1.value_and_gradient(x);
                let (_, g2) = u2.value_and_gradient(x);
                let s: f64 = g1.iter().zip(&g2).map(|(a, b)| (a - b).powi(2)).sum();
                let w2 = w.as_ref().map_or(1.0, |w| w.value(x).powi(2));
                w2 * s
            });
            let boundary = quad.integrate_boundary(|x| {
                let d = u1.value(x) - u2.value(x);
                let h = w.as_ref().map_or(1.0, |w| {
                    let (wv, wr) = w.value_and_radial(x);
                    wv * (2.0 / (nf - 2.0) * wr + wv)
                });
                h * d * d
            });
            Ok((n.c_n() * bulk + n.c_hat() * boundary).max(0.0).sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::Dimension;
    use crate::geometry::{conformal_ball, flat_ball};
    use crate::harmonics::{Basis, BoundaryField};
    use crate::operators::{InteriorField, Product};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_and_first_degree_energy() {
        let g = flat_ball(3).unwrap();
        let n = g.n();
        let q = BallQuadrature::new(n, 12);
        let b = Basis::new(n, 1);
        let y = HarmonicExtension::new(&BoundaryField::unit(n, 1, b.position(1, 0).unwrap()));
        let zero = HarmonicExtension::new(&BoundaryField::zeros(n, 1));
        assert_eq!(conformal_distance(&g, &y, &y, ConformalVariant::Lp, &q).unwrap(), 0.0);
        assert_eq!(conformal_distance(&g, &y, &y, ConformalVariant::Energy, &q).unwrap(), 0.0);
        let e = conformal_distance(&g, &y, &zero, ConformalVariant::Energy, &q).unwrap();
        assert!((e - 12f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn covariance_under_pullback() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = Dimension::new(3).unwrap();
        let flat = flat_ball(3).unwrap();
        let quad = BallQuadrature::new(n, 16);
        for _ in 0..50 {
            let mut w = BoundaryField::constant(n, 1, 1.0);
            for i in 1..w.len() {
                w.coeffs[i] = rng.random_range(-0.3..0.3);
            }
            let geom = conformal_ball(3, w.clone()).unwrap();
            let field = |rng: &mut ChaCha8Rng| {
                let v = BoundaryField::new(n, 2, DVector::from_fn(9, |_, _| rng.random_range(-1.0..1.0))).unwrap();
                let u0 = DMatrix::from_fn(9, 1, |_, _| rng.random_range(-0.5..0.5));
                InteriorField::new(v, u0).unwrap().evaluator()
            };
            let u1 = field(&mut rng);
            let u2 = field(&mut rng);
            let we = HarmonicExtension::new(&w);
            let p1 = Product { a: &we, b: &u1 };
            let p2 = Product { a: &we, b: &u2 };
            for variant in [ConformalVariant::Lp, ConformalVariant::Energy] {
                let in_g = conformal_distance(&geom, &u1, &u2, variant, &quad).unwrap();
                let pulled = conformal_distance(&flat, &p1, &p2, variant, &quad).unwrap();
                assert!((in_g / pulled - 1.0).abs() < 1e-8, "{variant:?}: {in_g} vs {pulled}");
            }
        }
    }
}
