use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{GraphPoint, ReductionContext};
use super::taylor::{TaylorReport, TaylorVerdict};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczEstimate {
    /// `γ̂ = max(0, α̂ − 2)`.
    pub gamma: f64,
    /// Fitted exponent `α̂` of the lower envelope, absent when skipped.
    pub alpha: Option<f64>,
    pub constant: Option<f64>,
    pub bins_used: usize,
    /// Too few distinct scales for a meaningful fit.
    pub degenerate: bool,
}

/// Graph solves along random rays at geometrically spaced radii.
pub fn lojasiewicz_samples(ctx: &ReductionContext, radii: &[f64], rays: usize, seed: u64) -> Result<Vec<GraphPoint>> {
    let l = ctx.kernel_dim();
    if l == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..rays)
        .map(|_| {
            let x: Vec<f64> = (0..l).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter().map(|v| v / r).collect()
        })
        .collect();
    let points: Vec<Vec<f64>> = dirs
        .iter()
        .flat_map(|d| radii.iter().map(move |r| d.iter().map(|v| v * r).collect()))
        .collect();
    points.par_iter().map(|a| ctx.solve_graph(a)).collect()
}

/// Fits `q(a) − q_c ≥ C dist(a, Z)^{α}` on the lower envelope of the samples, `Z`
/// being the origin plus the samples below the noise floor.
pub fn lojasiewicz_estimate(
    samples: &[GraphPoint],
    critical_value: f64,
    taylor: &TaylorReport,
    noise_floor: f64,
) -> LojasiewiczEstimate {
    let skip = LojasiewiczEstimate {
        gamma: 0.0,
        alpha: None,
        constant: None,
        bins_used: 0,
        degenerate: false,
    };
    match taylor.verdict {
        TaylorVerdict::Nondegenerate | TaylorVerdict::Integrable { .. } => return skip,
        TaylorVerdict::Asp { .. } => {}
    }
    let deficit: Vec<f64> = samples.iter().map(|s| (s.q - critical_value).abs()).collect();
    let mut zero_set: Vec<&[f64]> = samples
        .iter()
        .zip(&deficit)
        .filter(|(_, d)| **d <= noise_floor)
        .map(|(s, _)| s.a.as_slice())
        .collect();
    let origin = vec![0.0; samples.first().map_or(0, |s| s.a.len())];
    zero_set.push(&origin);
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .zip(&deficit)
        .filter(|(_, d)| **d > noise_floor)
        .filter_map(|(s, d)| {
            let dist = zero_set
                .iter()
                .map(|z| z.iter().zip(&s.a).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            (dist > 0.0).then(|| (dist.ln(), d.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return LojasiewiczEstimate {
            degenerate: true,
            ..skip
        };
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    let bins = 8usize;
    let width = (hi - lo) / bins as f64;
    let mut envelope: Vec<(f64, f64)> = Vec::new();
    if width > 1e-9 {
        for b in 0..bins {
            let (a, z) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
            let best = pts
                .iter()
                .filter(|p| p.0 >= a && (p.0 < z || (b == bins - 1 && p.0 <= z)))
                .min_by(|x, y| x.1.total_cmp(&y.1));
            if let Some(p) = best {
                envelope.push(*p);
            }
        }
    }
    if envelope.len() < 3 {
        return LojasiewiczEstimate {
            degenerate: true,
            bins_used: envelope.len(),
            ..skip
        };
    }
    let (slope, intercept) = linear_fit(&envelope);
    LojasiewiczEstimate {
        gamma: (slope - 2.0).max(0.0),
        alpha: Some(slope),
        constant: Some(intercept.exp()),
        bins_used: envelope.len(),
        degenerate: false,
    }
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
