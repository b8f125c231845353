use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{GraphPoint, ReductionContext};
use crate::error::{LabError, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaylorOptions {
    pub max_degree: usize,
    /// Sampling radius `r_s`; monomials are fitted in `y = a / r_s`.
    pub radius: f64,
    /// Homogeneous parts with `max_{|a| = r_s} |q_j| ≤ noise_floor` count as zero.
    pub noise_floor: f64,
    pub ridge: f64,
    pub max_condition: f64,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        Self {
            max_degree: 6,
            radius: 0.02,
            noise_floor: 1e-9,
            ridge: 1e-12,
            max_condition: 1e10,
        }
    }
}

/// One fitted homogeneous part `q_j(a) = Σ c_α (a/r_s)^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPart {
    pub degree: usize,
    pub exponents: Vec<Vec<usize>>,
    /// Coefficients in the scaled variable `a / r_s`.
    pub coefficients: Vec<f64>,
    /// `max |q_j|` over the sampling sphere.
    pub magnitude: f64,
}

impl HomogeneousPart {
    /// Value at `a` (unscaled kernel coordinates).
    pub fn eval(&self, a: &[f64], radius: f64) -> f64 {
        let y: Vec<f64> = a.iter().map(|v| v / radius).collect();
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(e, c)| c * monomial(e, &y))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspData {
    pub order: usize,
    /// `max q_p(x) / ‖Σ x_j k_j‖_p^p`.
    pub max: f64,
    /// Unit maximizer directions in kernel coordinates, best first.
    pub maximizers: Vec<Vec<f64>>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaylorVerdict {
    /// Trivial kernel.
    Nondegenerate,
    /// No nonzero `q_j` up to the fitted degree.
    Integrable { max_degree: usize },
    /// First nonzero part has degree `order`; the AS condition holds when its maximum is positive.
    Asp { order: usize, holds: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport {
    pub parts: Vec<HomogeneousPart>,
    pub order: Option<usize>,
    pub asp: Option<AspData>,
    pub verdict: TaylorVerdict,
    pub condition: f64,
    pub radius: f64,
}

fn monomial(e: &[usize], y: &[f64]) -> f64 {
    e.iter().zip(y).map(|(k, v)| v.powi(*k as i32)).product()
}

/// Exponent vectors of total degree `d` in `l` variables, lexicographically descending.
fn exponents(l: usize, d: usize) -> Vec<Vec<usize>> {
    if l == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in exponents(l - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn random_unit(rng: &mut ChaCha8Rng, l: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return x.iter().map(|v| v / r).collect();
        }
    }
}

/// Antipodal pairs of graph solves at radii `r_s·{¼, ½, ¾, 1}`, about three per monomial.
pub fn taylor_samples(ctx: &ReductionContext, opts: &TaylorOptions, seed: u64) -> Result<Vec<GraphPoint>> {
    let l = ctx.kernel_dim();
    if l == 0 {
        return Ok(Vec::new());
    }
    let terms: usize = (1..=opts.max_degree).map(|d| exponents(l, d).len()).sum();
    let per_radius = (3 * terms).div_ceil(8).max(l + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    for frac in [0.25, 0.5, 0.75, 1.0] {
        for _ in 0..per_radius {
            let d = random_unit(&mut rng, l);
            let a: Vec<f64> = d.iter().map(|v| v * frac * opts.radius).collect();
            points.push(a.iter().map(|v| -v).collect::<Vec<f64>>());
            points.push(a);
        }
    }
    points.par_iter().map(|a| ctx.solve_graph(a)).collect()
}

/// Fits homogeneous parts of `q − q(0)` and classifies the critical point.
pub fn taylor_probe(ctx: &ReductionContext, samples: &[GraphPoint], opts: &TaylorOptions) -> Result<TaylorReport> {
    let l = ctx.kernel_dim();
    if l == 0 {
        return Ok(TaylorReport {
            parts: Vec::new(),
            order: None,
            asp: None,
            verdict: TaylorVerdict::Nondegenerate,
            condition: 1.0,
            radius: opts.radius,
        });
    }
    let q0 = ctx.critical_value();
    let groups: Vec<Vec<Vec<usize>>> = (1..=opts.max_degree).map(|d| exponents(l, d)).collect();
    let all: Vec<&Vec<usize>> = groups.iter().flatten().collect();
    if samples.len() < all.len() {
        return Err(LabError::IllConditioned { condition: f64::INFINITY });
    }
    let design = DMatrix::from_fn(samples.len(), all.len(), |i, j| {
        let y: Vec<f64> = samples[i].a.iter().map(|v| v / opts.radius).collect();
        monomial(all[j], &y)
    });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.q - q0));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if !(condition < opts.max_condition) {
        return Err(LabError::IllConditioned { condition });
    }
    let u = svd.u.as_ref().ok_or(LabError::LinearAlgebra("svd"))?;
    let vt = svd.v_t.as_ref().ok_or(LabError::LinearAlgebra("svd"))?;
    let lambda = opts.ridge * smax * smax;
    let proj = u.tr_mul(&rhs);
    let scaled = DVector::from_iterator(
        proj.len(),
        proj.iter().zip(svd.singular_values.iter()).map(|(p, s)| p * s / (s * s + lambda)),
    );
    let coeffs = vt.tr_mul(&scaled);

    let mut rng = ChaCha8Rng::seed_from_u64(0x7a11);
    let mut probes: Vec<Vec<f64>> = (0..2000).map(|_| random_unit(&mut rng, l)).collect();
    for i in 0..l {
        let mut e = vec![0.0; l];
        e[i] = 1.0;
        probes.push(e.clone());
        e[i] = -1.0;
        probes.push(e);
    }
    let mut parts = Vec::new();
    let mut offset = 0;
    for (k, group) in groups.iter().enumerate() {
        let c: Vec<f64> = coeffs.rows(offset, group.len()).iter().copied().collect();
        offset += group.len();
        let mut part = HomogeneousPart {
            degree: k + 1,
            exponents: group.clone(),
            coefficients: c,
            magnitude: 0.0,
        };
        part.magnitude = probes.iter().map(|y| part.eval(y, 1.0).abs()).fold(0.0, f64::max);
        parts.push(part);
    }
    let order = parts.iter().find(|p| p.magnitude > opts.noise_floor).map(|p| p.degree);
    let (asp, verdict) = match order {
        None => (
            None,
            TaylorVerdict::Integrable {
                max_degree: opts.max_degree,
            },
        ),
        Some(p) => {
            let data = asp_maximize(ctx, &parts[p - 1], opts.radius)?;
            let holds = data.holds;
            (Some(data), TaylorVerdict::Asp { order: p, holds })
        }
    };
    Ok(TaylorReport {
        parts,
        order,
        asp,
        verdict,
        condition,
        radius: opts.radius,
    })
}

/// Maximizes `q_p(x) / ‖Σ x_j k_j‖_p^p` over directions by multistart simplex search.
fn asp_maximize(ctx: &ReductionContext, part: &HomogeneousPart, radius: f64) -> Result<AspData> {
    let l = ctx.kernel_dim();
    let base = ctx.functional().base();
    let kernel = &ctx.kernel().matrix;
    let ratio = |x: &[f64]| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r < 1e-12 {
            return f64::NEG_INFINITY;
        }
        let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
        let field = kernel * DVector::from_column_slice(&unit);
        part.eval(&unit, radius) / base.p_mass_coeffs(&field)
    };
    let mut starts = Vec::new();
    for i in 0..l {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; l];
            e[i] = sign;
            starts.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xa5b);
    for _ in 0..10 {
        starts.push(random_unit(&mut rng, l));
    }
    let opts = NelderMeadOptions {
        initial_step: 0.2,
        f_tol: 1e-15,
        x_tol: 1e-11,
        max_evals: 5000,
    };
    let mut found: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|x0| {
            let r = nelder_mead(|x| -ratio(x), x0, &opts);
            let norm = r.x.iter().map(|v| v * v).sum::<f64>().sqrt();
            (-r.f, r.x.iter().map(|v| v / norm).collect())
        })
        .collect();
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    let max = found[0].0;
    let tol = 1e-6 * max.abs().max(1e-300);
    let mut maximizers: Vec<Vec<f64>> = Vec::new();
    for (value, x) in &found {
        if max - value > tol {
            continue;
        }
        let distinct = maximizers
            .iter()
            .all(|m| m.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() > 1e-3);
        if distinct {
            maximizers.push(x.clone());
        }
    }
    Ok(AspData {
        order: part.degree,
        max,
        maximizers,
        holds: max > 0.0,
    })
}
