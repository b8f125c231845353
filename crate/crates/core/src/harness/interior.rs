use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{perturbed_sample, sample_rng, SweepOptions};
use crate::error::{LabError, Result};
use crate::functional::Functional;
use crate::harmonics::BoundaryField;
use crate::minimizers::{distance_to_family, NormTag};
use crate::operators::{h1_norm, InteriorField};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteriorSweepOptions {
    pub boundary: SweepOptions,
    /// Radial functions per harmonic in `u₀`.
    pub radial: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    /// Every k-th sample keeps `v = v*` (0 disables).
    pub pure_interior_every: usize,
    /// Draw `u₀`; when false every sample is a boundary-only record.
    pub interior: bool,
    /// Exponent used in the elementary chain `a^{2+γ} + b² ≥ C (a² + b²)^{1+γ/2}`.
    pub gamma: f64,
}

impl Default for InteriorSweepOptions {
    fn default() -> Self {
        Self {
            boundary: SweepOptions::default(),
            radial: 2,
            delta_min: 1e-3,
            delta_max: 0.3,
            pure_interior_every: 4,
            interior: true,
            gamma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorRecord {
    pub index: usize,
    pub seed: u64,
    pub eps: f64,
    /// Coefficient norm of `u₀`.
    pub delta: f64,
    pub pure_interior: bool,
    pub shift: f64,
    pub deficit: f64,
    /// Relative `H¹` distance of `u` to the extremal family.
    pub d_m: Option<f64>,
    pub ratio: Option<f64>,
    /// Boundary distance `a` (`H^{1/2}`) and relative interior size `b`.
    pub a: Option<f64>,
    pub b: f64,
    pub chain_ratio: Option<f64>,
    /// `|Q(u) − Q̃(v) − ⟨u₀, L u₀⟩/m^{2/p}|`.
    pub decomposition_error: f64,
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorSummary {
    pub min_ratio: f64,
    pub min_chain_ratio: f64,
    pub max_decomposition_error: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteriorSweepResult {
    pub records: Vec<InteriorRecord>,
    pub summary: InteriorSummary,
}

/// `Q(u)`, `Q̃(tr u)` and the interior term `⟨u₀, L u₀⟩ / m^{2/p}`.
pub fn decomposition(f: &Functional, u: &InteriorField) -> Result<(f64, f64, f64)> {
    let q = f.eval_q(u)?;
    let qt = f.eval_qtilde(&u.v)?;
    let m = f.p_mass(&u.v)?;
    Ok((q, qt, u.interior_energy() * m.powf(-2.0 / f.p())))
}

fn interior_sample(f: &Functional, opts: &InteriorSweepOptions, index: usize) -> Result<InteriorRecord> {
    let start = Instant::now();
    let mut rng = sample_rng(opts.boundary.seed, index);
    let (mut v, mut eps, shift) = {
        let (v, eps, _, shift) = perturbed_sample(f, &mut rng, &opts.boundary)?;
        (v, eps, shift)
    };
    let pure = opts.interior && opts.pure_interior_every > 0 && index.is_multiple_of(opts.pure_interior_every);
    if pure {
        v = f.normalize_p(&BoundaryField::constant(f.n(), f.degree(), 1.0))?.v;
        eps = 0.0;
    }
    let (u0, delta) = if opts.interior {
        let g: DMatrix<f64> = DMatrix::from_fn(f.len(), opts.radial, |_, _| StandardNormal.sample(&mut rng));
        let delta = rng.random_range(opts.delta_min.ln()..=opts.delta_max.ln()).exp();
        (&g * (delta / g.norm()), delta)
    } else {
        (DMatrix::zeros(f.len(), opts.radial), 0.0)
    };
    let u = InteriorField::new(v, u0)?;
    let (q, qt, interior) = decomposition(f, &u)?;
    let deficit = q - f.n().ball_sobolev_quotient();
    let d_m = distance_to_family(&u, NormTag::H1).ok().map(|r| r.value);
    let ratio = d_m.filter(|d| *d > 0.0).map(|d| deficit / (d * d));
    let a = if pure {
        Some(0.0)
    } else {
        distance_to_family(&u.v, NormTag::Hhalf).ok().map(|r| r.value)
    };
    let b = h1_norm(&u.interior_part()) / h1_norm(&u);
    let chain_ratio = a.and_then(|a| {
        let s = a * a + b * b;
        (s > 0.0).then(|| (a.powf(2.0 + opts.gamma) + b * b) / s.powf(1.0 + opts.gamma / 2.0))
    });
    Ok(InteriorRecord {
        index,
        seed: opts.boundary.seed,
        eps,
        delta,
        pure_interior: pure,
        shift,
        deficit,
        d_m,
        ratio,
        a,
        b,
        chain_ratio,
        decomposition_error: (q - qt - interior).abs(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Composite perturbations `u₀ + Ev` on the flat ball.
pub fn interior_sweep(f: &Functional, opts: &InteriorSweepOptions) -> Result<InteriorSweepResult> {
    if !f.geometry().is_flat() {
        return Err(LabError::NonFlatGeometry("interior_sweep"));
    }
    if opts.boundary.samples == 0 {
        return Err(LabError::InvalidArgument("sweep needs at least one sample".into()));
    }
    let records: Vec<InteriorRecord> = (0..opts.boundary.samples)
        .into_par_iter()
        .map(|i| interior_sample(f, opts, i))
        .collect::<Result<_>>()?;
    let summary = InteriorSummary {
        min_ratio: records.iter().filter_map(|r| r.ratio).fold(f64::INFINITY, f64::min),
        min_chain_ratio: records.iter().filter_map(|r| r.chain_ratio).fold(f64::INFINITY, f64::min),
        max_decomposition_error: records.iter().map(|r| r.decomposition_error).fold(0.0, f64::max),
        failures: records.iter().filter(|r| r.d_m.is_none() || r.a.is_none()).count(),
    };
    Ok(InteriorSweepResult { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::flat_ball;
    use crate::harness::stability_sweep;
    use crate::operators::BallQuadrature;

    fn flat(degree: usize) -> Functional {
        Functional::new(&flat_ball(3).unwrap(), degree).unwrap()
    }

    #[test]
    fn boundary_only_matches_stability_sweep() {
        let f = flat(4);
        let base = SweepOptions {
            samples: 6,
            seed: 9,
            ..SweepOptions::default()
        };
        let opts = InteriorSweepOptions {
            boundary: base.clone(),
            interior: false,
            ..InteriorSweepOptions::default()
        };
        let a = interior_sweep(&f, &opts).unwrap();
        let b = stability_sweep(&f, &base).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!((x.deficit - y.deficit).abs() < 1e-12, "{} {}", x.deficit, y.deficit);
            assert_eq!(x.eps, y.eps);
        }
    }

    #[test]
    fn pure_interior_deficit_matches_quadrature() {
        let f = flat(3);
        let opts = InteriorSweepOptions {
            boundary: SweepOptions {
                samples: 1,
                seed: 2,
                ..SweepOptions::default()
            },
            ..InteriorSweepOptions::default()
        };
        let mut rng = sample_rng(2, 0);
        let _ = perturbed_sample(&f, &mut rng, &opts.boundary).unwrap();
        let r = interior_sample(&f, &opts, 0).unwrap();
        assert!(r.pure_interior && r.deficit > 0.0);
        // Rebuild the same u₀ and integrate c_n |∇u₀|² directly.
        let g: DMatrix<f64> = DMatrix::from_fn(f.len(), opts.radial, |_, _| StandardNormal.sample(&mut rng));
        let delta: f64 = rng.random_range(opts.delta_min.ln()..=opts.delta_max.ln()).exp();
        let u0 = &g * (delta / g.norm());
        let v = f.normalize_p(&BoundaryField::constant(f.n(), 3, 1.0)).unwrap().v;
        let u = InteriorField::new(v, u0).unwrap();
        let quad = BallQuadrature::new(f.n(), 16);
        let energy = f.n().c_n() * quad.dirichlet(&u.interior_part().evaluator());
        assert!((r.deficit - energy).abs() < 1e-10, "{} vs {energy}", r.deficit);
    }

    #[test]
    fn mixed_sweep_is_coercive() {
        let f = flat(3);
        let opts = InteriorSweepOptions {
            boundary: SweepOptions {
                samples: 8,
                seed: 4,
                ..SweepOptions::default()
            },
            ..InteriorSweepOptions::default()
        };
        let r = interior_sweep(&f, &opts).unwrap();
        assert!(r.summary.min_ratio > 0.0);
        assert!(r.summary.max_decomposition_error < 1e-9);
        assert!((r.summary.min_chain_ratio - 1.0).abs() < 1e-12);
    }
}
