//! Numerical Lyapunov–Schmidt reduction at a critical point of `Q̃`.
//!
//! With `K` the kernel of `∇²_𝓑 Q̃(v)` and `Φ` an orthonormal basis of
//! `K^⊥ ∩ T_v𝓑`, the graph map `F(a) = Φ y(a)` solves `Φᵀ ∇Q̃(v + Ka + Φy) = 0`
//! and the reduced function is `q(a) = Q̃(v + Ka + F(a))`.

mod graph;
mod lojasiewicz;
mod planted;
mod taylor;

use serde::{Deserialize, Serialize};

pub use graph::{
    kernel, projected_gradient_norm, GraphPoint, KernelData, ReductionContext, ReductionOptions, CRITICAL_TOLERANCE,
};
pub use lojasiewicz::{linear_fit, lojasiewicz_estimate, lojasiewicz_samples, LojasiewiczEstimate};
pub use planted::{PlantedForm, PlantedFunctional};
pub use taylor::{taylor_probe, taylor_samples, AspData, HomogeneousPart, TaylorOptions, TaylorReport, TaylorVerdict};

use crate::error::Result;
use crate::functional::{BoundaryFunctional, ConstraintState};
use crate::harmonics::BoundaryField;

/// Everything computed by [`reduce`], serializable with the full sample tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionResult {
    pub kernel: Vec<BoundaryField>,
    pub kernel_dim: usize,
    pub spectral_gap: f64,
    pub critical_value: f64,
    pub taylor_samples: Vec<GraphPoint>,
    pub lojasiewicz_samples: Vec<GraphPoint>,
    pub taylor: TaylorReport,
    pub lojasiewicz: LojasiewiczEstimate,
}

/// Radii of the Łojasiewicz rays, geometric in `[0.004, 0.064]`.
pub const LOJASIEWICZ_RADII: [f64; 5] = [0.004, 0.008, 0.016, 0.032, 0.064];

pub fn reduce(
    f: &dyn BoundaryFunctional,
    state: &ConstraintState,
    opts: ReductionOptions,
    taylor_opts: &TaylorOptions,
    seed: u64,
) -> Result<ReductionResult> {
    let ctx = ReductionContext::new(f, state, opts)?;
    let samples = taylor_samples(&ctx, taylor_opts, seed)?;
    let taylor = taylor_probe(&ctx, &samples, taylor_opts)?;
    let rays = if matches!(taylor.verdict, TaylorVerdict::Asp { .. }) { 24 } else { 0 };
    let loj_samples = lojasiewicz_samples(&ctx, &LOJASIEWICZ_RADII, rays, seed.wrapping_add(1))?;
    let lojasiewicz = lojasiewicz_estimate(&loj_samples, ctx.critical_value(), &taylor, taylor_opts.noise_floor);
    Ok(ReductionResult {
        kernel: ctx.kernel().fields.clone(),
        kernel_dim: ctx.kernel_dim(),
        spectral_gap: ctx.kernel().gap,
        critical_value: ctx.critical_value(),
        taylor_samples: samples,
        lojasiewicz_samples: loj_samples,
        taylor,
        lojasiewicz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Functional;
    use crate::geometry::flat_ball;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn flat(degree: usize) -> (Functional, ConstraintState) {
        let f = Functional::new(&flat_ball(3).unwrap(), degree).unwrap();
        let s = f.normalize_p(&BoundaryField::constant(f.n(), degree, 1.0)).unwrap();
        (f, s)
    }

    #[test]
    fn flat_ball_is_integrable() {
        let (f, s) = flat(5);
        let r = reduce(&f, &s, ReductionOptions::default(), &TaylorOptions::default(), 3).unwrap();
        assert_eq!(r.kernel_dim, 3);
        assert_eq!(r.taylor.verdict, TaylorVerdict::Integrable { max_degree: 6 });
        assert_eq!(r.lojasiewicz.gamma, 0.0);
        for pt in &r.taylor_samples {
            assert!((pt.q - 8.0 * PI.sqrt()).abs() < 1e-8);
            assert!(pt.residual < 1e-11);
        }
        let json = serde_json::to_string(&r).unwrap();
        let back: ReductionResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.taylor, r.taylor);
    }

    #[test]
    fn planted_cubic() {
        let (f, s) = flat(4);
        let d = vec![0.48, 0.6, 0.64];
        let form = PlantedForm::Power {
            sigma: 2.0,
            direction: d.clone(),
            order: 3,
        };
        let pf = PlantedFunctional::new(f, &s, form.clone()).unwrap();
        let r = reduce(&pf, &s, ReductionOptions::default(), &TaylorOptions::default(), 7).unwrap();
        assert_eq!(r.taylor.verdict, TaylorVerdict::Asp { order: 3, holds: true });
        let asp = r.taylor.asp.as_ref().unwrap();
        let best = &asp.maximizers[0];
        let err = best.iter().zip(&d).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-3, "maximizer {best:?}");
    }

    #[test]
    fn planted_quartic_values_and_exponent() {
        let (f, s) = flat(4);
        let form = PlantedForm::RadialQuartic { sigma: 10.0 };
        let pf = PlantedFunctional::new(f, &s, form.clone()).unwrap();
        let ctx = ReductionContext::new(&pf, &s, ReductionOptions::default()).unwrap();
        for a in [[0.05, 0.0, 0.0], [0.01, -0.03, 0.02], [0.0, 0.02, 0.04]] {
            let q = ctx.reduced_q(&a).unwrap();
            assert!((q - ctx.critical_value() - form.value(&a)).abs() < 1e-6);
        }
        let r = reduce(&pf, &s, ReductionOptions::default(), &TaylorOptions::default(), 11).unwrap();
        assert_eq!(r.taylor.verdict, TaylorVerdict::Asp { order: 4, holds: true });
        assert!((r.lojasiewicz.gamma - 2.0).abs() < 0.2, "{:?}", r.lojasiewicz);
    }

    #[test]
    fn negative_quartic_fails_condition() {
        let (f, s) = flat(4);
        let pf = PlantedFunctional::new(f, &s, PlantedForm::RadialQuartic { sigma: -10.0 }).unwrap();
        let ctx = ReductionContext::new(&pf, &s, ReductionOptions::default()).unwrap();
        let opts = TaylorOptions::default();
        let samples = taylor_samples(&ctx, &opts, 5).unwrap();
        let t = taylor_probe(&ctx, &samples, &opts).unwrap();
        assert_eq!(t.verdict, TaylorVerdict::Asp { order: 4, holds: false });
    }

    #[test]
    fn no_kernel_branch() {
        let (f, s) = flat(3);
        let pf = PlantedFunctional::new(f, &s, PlantedForm::Quadratic { sigma: 4.0 }).unwrap();
        let r = reduce(&pf, &s, ReductionOptions::default(), &TaylorOptions::default(), 1).unwrap();
        assert_eq!(r.kernel_dim, 0);
        assert_eq!(r.taylor.verdict, TaylorVerdict::Nondegenerate);
        assert_eq!(r.lojasiewicz.gamma, 0.0);
    }

    /// `∇q(a)[K^T φ] = c_a ∇Q̃(ĥ)·φ` for `φ ∈ T_v𝓑`, `ĥ = h/‖h‖_p`, `c_a = ‖h‖_p^{-1}`.
    #[test]
    fn gradient_relation() {
        let (f, s) = flat(4);
        let pf = PlantedFunctional::new(
            f,
            &s,
            PlantedForm::Power {
                sigma: 3.0,
                direction: vec![0.0, 0.6, 0.8],
                order: 3,
            },
        )
        .unwrap();
        let ctx = ReductionContext::new(&pf, &s, ReductionOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(-0.03..0.03)).collect();
            let pt = ctx.solve_graph(&a).unwrap();
            let h = ctx.variety_point(&pt);
            let norm = pf.base().p_mass_coeffs(&h).powf(1.0 / pf.base().p());
            let hat = &h / norm;
            let raw = DVector::from_fn(h.len(), |_, _| rng.random_range(-1.0..1.0));
            let phi = &raw - ctx.normal() * ctx.normal().dot(&raw);
            let rhs = pf.gradient(&hat).unwrap().dot(&phi) / norm;
            let da: Vec<f64> = ctx.kernel().matrix.tr_mul(&phi).iter().copied().collect();
            let lhs = ctx.reduced_derivative(&a, &da, 1e-5).unwrap();
            assert!((lhs - rhs).abs() < 1e-5 * rhs.abs().max(1e-3), "{lhs} vs {rhs}");
        }
    }
}
