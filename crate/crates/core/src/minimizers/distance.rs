use nalgebra::{DMatrix, DVector};
use num_dual::{Dual64, DualNum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bubble::{chart_coefficients, chart_coefficients_dual, BubbleParams};
use crate::error::{LabError, Result};
use crate::harmonics::{Basis, BoundaryField};
use crate::operators::InteriorField;
use crate::optim::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    /// `H¹(B)` norm of the field (harmonic extension for boundary data).
    H1,
    /// Boundary norm `Σ (1 + l) v_i²`.
    Hhalf,
    /// `L^{2n/(n−2)}(B)` norm; only available through [`conformal_distance`](super::conformal_distance).
    LpConformal,
    /// Energy `c_n ∫|∇u|² + ĉ_n ∫_∂ u²`.
    EnergyConformal,
}

/// Relative distance of a field to the bubble family, with the optimizer trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub value: f64,
    pub params: BubbleParams,
    pub tag: NormTag,
    /// Simplex iterations summed over all starts plus polishing steps.
    pub iterations: usize,
    pub starts: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct DistanceOptions {
    pub seed: u64,
    pub random_starts: usize,
    pub radii: Vec<f64>,
    pub tolerance: f64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            seed: 0x0b0b_b1e5,
            random_starts: 14,
            radii: vec![0.3, 0.6],
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum DistanceInput<'a> {
    Boundary(&'a BoundaryField),
    Interior(&'a InteriorField),
}

impl<'a> From<&'a BoundaryField> for DistanceInput<'a> {
    fn from(v: &'a BoundaryField) -> Self {
        DistanceInput::Boundary(v)
    }
}

impl<'a> From<&'a InteriorField> for DistanceInput<'a> {
    fn from(u: &'a InteriorField) -> Self {
        DistanceInput::Interior(u)
    }
}

/// Squared norm of `u − E(cβ(a))` as `Σ d_i (t_i − c β_i)² + rest`, with the
/// interior cross terms folded into `t` by completing the square.
struct Problem {
    basis: Basis,
    sqrt_d: DVector<f64>,
    target: DVector<f64>,
    rest: f64,
}

impl Problem {
    fn new<'a>(input: DistanceInput<'a>, tag: NormTag) -> Result<Self> {
        let harmonic;
        let u = match input {
            DistanceInput::Boundary(v) => {
                harmonic = InteriorField::harmonic(v.clone());
                &harmonic
            }
            DistanceInput::Interior(u) => u,
        };
        let v = u.trace();
        let basis = Basis::new(v.n, v.degree);
        let n = v.n;
        let (d, m, k0) = match tag {
            NormTag::Hhalf => {
                let d = DVector::from_iterator(basis.len(), basis.indices().iter().map(|ix| 1.0 + ix.l as f64));
                (d, DVector::zeros(basis.len()), 0.0)
            }
            NormTag::H1 => u.h1_harmonic_data(),
            NormTag::EnergyConformal => {
                let d = DVector::from_iterator(
                    basis.len(),
                    basis.indices().iter().map(|ix| n.c_n() * ix.l as f64 + n.c_hat()),
                );
                (d, DVector::zeros(basis.len()), u.interior_energy())
            }
            NormTag::LpConformal => {
                return Err(LabError::InvalidArgument(
                    "the Lp distance is not quadratic; use conformal_distance".into(),
                ))
            }
        };
        let norm2 = v.coeffs.iter().zip(d.iter()).map(|(c, d)| d * c * c).sum::<f64>() + 2.0 * m.dot(&v.coeffs) + k0;
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(LabError::InvalidArgument("distance input must be nonzero".into()));
        }
        let scale = norm2.sqrt();
        let target = DVector::from_iterator(
            basis.len(),
            (0..basis.len()).map(|i| d[i].sqrt() * (v.coeffs[i] + m[i] / d[i]) / scale),
        );
        let rest = ((k0 - m.iter().zip(d.iter()).map(|(m, d)| m * m / d).sum::<f64>()) / norm2).max(0.0);
        Ok(Self {
            sqrt_d: d.map(f64::sqrt),
            basis,
            target,
            rest,
        })
    }

    fn weighted_shape(&self, a: &[f64]) -> DVector<f64> {
        chart_coefficients(&self.basis, a, 1.0).component_mul(&self.sqrt_d)
    }

    /// Best amplitude and squared residual at chart point `a`.
    fn profile(&self, a: &[f64]) -> (f64, f64) {
        let b = self.weighted_shape(a);
        let c = (self.target.dot(&b) / b.norm_squared()).max(0.0);
        ((&self.target - &b * c).norm_squared() + self.rest, c)
    }
}

fn chart_of(z: &[f64]) -> Vec<f64> {
    let s = (1.0 + z.iter().map(|v| v * v).sum::<f64>()).sqrt();
    z.iter().map(|v| v / s).collect()
}

fn chart_of_dual(z: &[Dual64]) -> Vec<Dual64> {
    let mut s = Dual64::from(1.0);
    for v in z {
        s += *v * *v;
    }
    let s = s.sqrt();
    z.iter().map(|v| *v / s).collect()
}

fn start_point(rho: f64, dir: &[f64]) -> Vec<f64> {
    let scale = rho / (1.0 - rho * rho).sqrt();
    dir.iter().map(|v| v * scale).collect()
}

pub fn distance_to_family<'a>(input: impl Into<DistanceInput<'a>>, tag: NormTag) -> Result<DistanceReport> {
    distance_to_family_with(input, tag, &DistanceOptions::default())
}

/// Multistart simplex search over the compactified chart `a = z/√(1+|z|²)`, the amplitude
/// solved in closed form, then a Levenberg–Marquardt polish of `(c, z)`.
pub fn distance_to_family_with<'a>(
    input: impl Into<DistanceInput<'a>>,
    tag: NormTag,
    opts: &DistanceOptions,
) -> Result<DistanceReport> {
    let problem = Problem::new(input.into(), tag)?;
    let n = problem.basis.dimension().get();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for rho in &opts.radii {
        for axis in 0..n {
            for sign in [1.0, -1.0] {
                let mut dir = vec![0.0; n];
                dir[axis] = sign;
                starts.push(start_point(*rho, &dir));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let dir: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        starts.push(start_point(rng.random_range(0.0..0.9), &dir));
    }
    let nm_opts = NelderMeadOptions {
        initial_step: 0.1,
        f_tol: opts.tolerance,
        x_tol: 1e-8,
        max_evals: 3000,
    };
    let runs: Vec<_> = starts
        .par_iter()
        .map(|z0| nelder_mead(|z| problem.profile(&chart_of(z)).0, z0, &nm_opts))
        .collect();
    let mut iterations: usize = runs.iter().map(|r| r.iterations).sum();
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|a, b| runs[*a].f.total_cmp(&runs[*b].f).then(a.cmp(b)));
    let mut best: Option<(f64, f64, Vec<f64>, bool)> = None;
    for &i in order.iter().take(3) {
        let run = &runs[i];
        let (_, c0) = problem.profile(&chart_of(&run.x));
        let (obj, c, z, steps, polished) = polish(&problem, c0, run.x.clone());
        iterations += steps;
        let converged = run.converged || polished;
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, c, z, converged));
        }
    }
    let (obj, c, z, converged) = best.expect("at least one start");
    Ok(DistanceReport {
        value: obj.max(0.0).sqrt().min(1.0),
        params: BubbleParams {
            amplitude: c,
            chart: chart_of(&z),
        },
        tag,
        iterations,
        starts: starts.len(),
        converged,
    })
}

/// Levenberg–Marquardt on the residual `t − c β̃(a(z))`; returns (objective, c, z, steps, converged).
fn polish(problem: &Problem, c0: f64, z0: Vec<f64>) -> (f64, f64, Vec<f64>, usize, bool) {
    let n = z0.len();
    let residual = |c: f64, z: &[f64]| &problem.target - problem.weighted_shape(&chart_of(z)) * c;
    let mut c = c0;
    let mut z = z0;
    let mut r = residual(c, &z);
    let mut obj = r.norm_squared();
    let mut mu = 1e-3;
    let mut steps = 0;
    let mut converged = false;
    if c <= 0.0 {
        return (obj + problem.rest, c, z, 0, false);
    }
    for _ in 0..100 {
        steps += 1;
        let mut jac = DMatrix::zeros(r.len(), n + 1);
        let shape = problem.weighted_shape(&chart_of(&z));
        jac.set_column(0, &(-&shape));
        for j in 0..n {
            let zd: Vec<Dual64> = z
                .iter()
                .enumerate()
                .map(|(k, v)| Dual64::new(*v, if k == j { 1.0 } else { 0.0 }))
                .collect();
            let a = chart_of_dual(&zd);
            let col = chart_coefficients_dual(&problem.basis, &a, Dual64::from(c));
            for (i, v) in col.iter().enumerate() {
                jac[(i, j + 1)] = -v.eps * problem.sqrt_d[i];
            }
        }
        let jtj = jac.tr_mul(&jac);
        let jtr = jac.tr_mul(&r);
        if jtr.amax() < 1e-15 {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut lhs = jtj.clone();
            for k in 0..=n {
                lhs[(k, k)] += mu * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = lhs.cholesky().map(|ch| ch.solve(&(-&jtr))) else {
                mu *= 10.0;
                continue;
            };
            let c_new = c + step[0];
            let z_new: Vec<f64> = z.iter().zip(step.iter().skip(1)).map(|(a, b)| a + b).collect();
            if c_new > 0.0 {
                let r_new = residual(c_new, &z_new);
                let o = r_new.norm_squared();
                if o <= obj {
                    let small = step.amax() < 1e-14 * (1.0 + c.abs());
                    c = c_new;
                    z = z_new;
                    r = r_new;
                    let rel = (obj - o) / obj.max(1e-300);
                    obj = o;
                    mu = (mu / 3.0).max(1e-12);
                    improved = true;
                    if small || rel < 1e-15 {
                        converged = true;
                    }
                    break;
                }
            }
            mu *= 4.0;
        }
        if !improved || converged {
            converged = converged || obj < 1e-24;
            break;
        }
    }
    (obj + problem.rest, c, z, steps, converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::Dimension;
    use crate::minimizers::Bubble;
    use crate::operators::h_half_norm;
    use std::f64::consts::PI;

    fn vstar(n: Dimension, degree: usize) -> BoundaryField {
        BoundaryField::constant(n, degree, (4.0 * PI).powf(-0.25))
    }

    #[test]
    fn exact_bubble_has_zero_distance() {
        let n = Dimension::new(3).unwrap();
        for pole in [[0.0, 0.0, 2.0], [1.5, -1.0, 0.7]] {
            let b = Bubble::new(n, BubbleParams::from_pole(0.9, &pole).unwrap()).unwrap();
            let v = b.coefficients(8);
            for tag in [NormTag::Hhalf, NormTag::H1, NormTag::EnergyConformal] {
                let r = distance_to_family(&v, tag).unwrap();
                assert!(r.value < 1e-8, "{tag:?}: {}", r.value);
                assert_eq!(r.starts, 26);
            }
        }
    }

    #[test]
    fn second_degree_perturbation() {
        let n = Dimension::new(3).unwrap();
        let basis = Basis::new(n, 6);
        let eps = 0.01;
        let mut v = vstar(n, 6);
        v.coeffs[basis.position(2, 0).unwrap()] += eps;
        let r = distance_to_family(&v, NormTag::Hhalf).unwrap();
        let predicted = eps * 3f64.sqrt() / h_half_norm(&vstar(n, 6));
        assert!(r.value > 0.9 * predicted && r.value < 1.1 * predicted, "{} vs {predicted}", r.value);
    }

    #[test]
    fn first_degree_perturbation_is_tangent() {
        let n = Dimension::new(3).unwrap();
        let basis = Basis::new(n, 6);
        let eps = 0.01;
        let mut v = vstar(n, 6);
        v.coeffs[basis.position(1, 0).unwrap()] += eps;
        let r = distance_to_family(&v, NormTag::Hhalf).unwrap();
        let scale = eps * 2f64.sqrt() / h_half_norm(&vstar(n, 6));
        assert!(r.value < 0.2 * scale, "{} vs {scale}", r.value);
    }

    #[test]
    fn scale_invariance() {
        let n = Dimension::new(3).unwrap();
        let mut v = vstar(n, 5);
        v.coeffs[3] += 0.05;
        v.coeffs[7] -= 0.03;
        v.coeffs[12] += 0.02;
        for tag in [NormTag::Hhalf, NormTag::H1] {
            let a = distance_to_family(&v, tag).unwrap();
            let b = distance_to_family(&v.scaled(7.0), tag).unwrap();
            assert!((a.value - b.value).abs() < 1e-10);
        }
    }

    #[test]
    fn bounded_by_one_and_n4() {
        let n = Dimension::new(4).unwrap();
        let basis = Basis::new(n, 3);
        let mut v = BoundaryField::zeros(n, 3);
        v.coeffs[basis.position(3, 0).unwrap()] = 1.0;
        let r = distance_to_family(&v, NormTag::Hhalf).unwrap();
        assert!(r.value <= 1.0 + 1e-12 && r.value > 0.5);
        let b = Bubble::new(n, BubbleParams::new(1.2, vec![0.1, -0.2, 0.3, 0.0]).unwrap()).unwrap();
        let r = distance_to_family(&b.coefficients(6), NormTag::H1).unwrap();
        assert!(r.value < 1e-8);
        assert_eq!(r.starts, 2 * 4 * 2 + 14);
    }

    #[test]
    fn interior_part_counts_in_h1() {
        let n = Dimension::new(3).unwrap();
        let b = Bubble::new(n, BubbleParams::new(1.0, vec![0.0, 0.2, 0.0]).unwrap()).unwrap();
        let v = b.coefficients(4);
        let mut u0 = DMatrix::zeros(v.len(), 1);
        u0[(0, 0)] = 0.05;
        let u = InteriorField::new(v.clone(), u0).unwrap();
        let with = distance_to_family(&u, NormTag::H1).unwrap();
        assert!(with.value > 1e-3);
        assert!(distance_to_family(&u, NormTag::Hhalf).unwrap().value < 1e-8);
    }

    #[test]
    fn report_json_round_trip() {
        let n = Dimension::new(3).unwrap();
        let r = distance_to_family(&vstar(n, 2), NormTag::H1).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: DistanceReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(matches!(
            distance_to_family(&vstar(n, 2), NormTag::LpConformal),
            Err(LabError::InvalidArgument(_))
        ));
        assert!(distance_to_family(&BoundaryField::zeros(n, 2), NormTag::Hhalf).is_err());
    }
}
