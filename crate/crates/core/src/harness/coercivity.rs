use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::sample_rng;
use crate::error::{LabError, Result};
use crate::operators::h_half_weights;
use crate::reduction::ReductionContext;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoercivityOptions {
    pub samples: usize,
    pub seed: u64,
    pub a_max: f64,
    pub eta_max: f64,
    /// `‖η‖` used for the small-perturbation limit.
    pub limit_norm: f64,
}

impl Default for CoercivityOptions {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 17,
            a_max: 0.02,
            eta_max: 0.05,
            limit_norm: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityRecord {
    pub index: usize,
    /// Harmonic degree the direction was drawn from before projection.
    pub degree: usize,
    pub a_norm: f64,
    pub eta_norm: f64,
    pub deficit: f64,
    /// `‖u − P(u)‖²_{H^{1/2}}`.
    pub distance_sq: f64,
    pub ratio: f64,
    /// Same direction at `a = 0` and `‖η‖ = limit_norm`.
    pub limit_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoercivityResult {
    pub records: Vec<CoercivityRecord>,
    /// Measured `C₁ = min ratio`.
    pub c1: f64,
    pub limit: f64,
    /// Smallest generalized eigenvalue of `(½ΦᵀHΦ, ΦᵀDΦ)`.
    pub prediction: f64,
    pub relative_gap: f64,
}

/// Smallest eigenvalue of the `H^{1/2}`-normalized Hessian on `K^⊥ ∩ T`.
pub fn coercivity_prediction(ctx: &ReductionContext) -> Result<f64> {
    let f = ctx.functional();
    let phi = ctx.complement();
    let h = f.hessian(ctx.critical_point())? * 0.5;
    let d = DMatrix::from_diagonal(&h_half_weights(f.base().n(), f.base().degree()));
    let a = phi.tr_mul(&(h * phi));
    let b = phi.tr_mul(&(d * phi));
    let chol = b.cholesky().ok_or(LabError::LinearAlgebra("H^1/2 Gram not positive"))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or(LabError::LinearAlgebra("H^1/2 Gram not invertible"))?;
    let m = &l_inv * a * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    Ok(m.symmetric_eigen().eigenvalues.min())
}

fn direction(ctx: &ReductionContext, rng: &mut impl Rng) -> (DVector<f64>, usize) {
    let base = ctx.functional().base();
    let degrees = base.spectral().basis().degrees();
    let phi = ctx.complement();
    loop {
        let l = rng.random_range(2..=base.degree());
        let raw = DVector::from_iterator(
            degrees.len(),
            degrees.iter().map(|d| {
                let x: f64 = StandardNormal.sample(rng);
                if *d == l {
                    x
                } else {
                    0.0
                }
            }),
        );
        let eta = phi * phi.tr_mul(&raw);
        let norm = eta.norm();
        if norm > 1e-6 * raw.norm() {
            return (eta / norm, l);
        }
    }
}

fn ratio_at(ctx: &ReductionContext, u: &DVector<f64>, d: &DVector<f64>) -> Result<(f64, f64)> {
    let f = ctx.functional();
    let (pu, _) = ctx.project_to_variety(u)?;
    let deficit = f.value(u)? - f.value(&pu)?;
    let diff = u - pu;
    let dist = diff.iter().zip(d.iter()).map(|(x, w)| w * x * x).sum::<f64>();
    Ok((deficit, dist))
}

/// Quadratic growth of `F` off the reduced variety.
pub fn coercivity(ctx: &ReductionContext, opts: &CoercivityOptions) -> Result<CoercivityResult> {
    let base = ctx.functional().base();
    if base.degree() < 2 {
        return Err(LabError::InvalidArgument("coercivity needs degree ≥ 2".into()));
    }
    let d = h_half_weights(base.n(), base.degree());
    let l = ctx.kernel_dim();
    let records: Vec<CoercivityRecord> = (0..opts.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(opts.seed, i);
            let (eta_dir, degree) = direction(ctx, &mut rng);
            let a: Vec<f64> = if l > 0 {
                let x: Vec<f64> = (0..l).map(|_| StandardNormal.sample(&mut rng)).collect();
                let r = x.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
                let scale = opts.a_max * rng.random_range(0.0..=1.0f64);
                x.iter().map(|v| v / r * scale).collect()
            } else {
                Vec::new()
            };
            let eta_norm = opts.eta_max * rng.random_range(0.05..=1.0f64);
            let h = ctx.variety_point(&ctx.solve_graph(&a)?);
            let (deficit, distance_sq) = ratio_at(ctx, &(&h + &eta_dir * eta_norm), &d)?;
            let (ld, ldist) = ratio_at(ctx, &(ctx.critical_point() + &eta_dir * opts.limit_norm), &d)?;
            Ok(CoercivityRecord {
                index: i,
                degree,
                a_norm: a.iter().map(|v| v * v).sum::<f64>().sqrt(),
                eta_norm,
                deficit,
                distance_sq,
                ratio: deficit / distance_sq,
                limit_ratio: ld / ldist,
            })
        })
        .collect::<Result<_>>()?;
    let c1 = records.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let limit = records.iter().map(|r| r.limit_ratio).fold(f64::INFINITY, f64::min);
    let prediction = coercivity_prediction(ctx)?;
    Ok(CoercivityResult {
        records,
        c1,
        limit,
        prediction,
        relative_gap: (limit - prediction).abs() / prediction.abs(),
    })
}
