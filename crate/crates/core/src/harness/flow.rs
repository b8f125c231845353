use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functional::{tangent_basis, Functional};
use crate::harmonics::BoundaryField;
use crate::minimizers::{distance_to_family, DistanceReport, NormTag};
use crate::operators::InteriorField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    /// Record the distance to the family every `distance_stride` iterations; 0 records only the final one.
    pub distance_stride: usize,
    /// Below this gradient norm, try a projected Newton step before the gradient step (0 disables).
    pub newton_threshold: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            gradient_tolerance: 1e-9,
            initial_step: 1e-2,
            distance_stride: 0,
            newton_threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowIterate {
    pub iteration: usize,
    pub value: f64,
    pub gradient_norm: f64,
    /// Step length that produced this iterate (0 for the start).
    pub step: f64,
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub iterates: Vec<FlowIterate>,
    pub converged: bool,
    pub abort_reason: Option<String>,
    pub final_field: BoundaryField,
    pub final_value: f64,
    pub final_gradient: f64,
    pub final_distance: Option<DistanceReport>,
}

struct Descent {
    x: DVector<f64>,
    value: f64,
    gradient_norm: f64,
    iterates: Vec<FlowIterate>,
    converged: bool,
    abort_reason: Option<String>,
}

/// Projected gradient descent with Armijo backtracking and renormalization after every step.
///
/// `eval` returns the value and the tangent gradient at a normalized point; `normalize`
/// maps a trial point back onto the constraint set and fails on loss of positivity.
fn descend(
    x0: DVector<f64>,
    eval: impl Fn(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
    normalize: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    distance: impl Fn(&DVector<f64>) -> Option<f64>,
    newton: impl Fn(&DVector<f64>, &DVector<f64>) -> Option<DVector<f64>>,
    opts: &FlowOptions,
) -> Result<Descent> {
    let mut x = normalize(&x0)?;
    let (mut value, mut g) = eval(&x)?;
    let mut gn = g.norm();
    let mut iterates = vec![FlowIterate {
        iteration: 0,
        value,
        gradient_norm: gn,
        step: 0.0,
        distance: (opts.distance_stride > 0).then(|| distance(&x)).flatten(),
    }];
    let mut step = opts.initial_step;
    let mut converged = false;
    let mut abort_reason = None;
    let mut it = 0;
    loop {
        if gn < opts.gradient_tolerance {
            converged = true;
            break;
        }
        if it >= opts.max_iterations {
            break;
        }
        it += 1;
        let try_step = |d: &DVector<f64>, t: f64| -> Option<(DVector<f64>, f64, DVector<f64>, f64)> {
            let trial = normalize(&(&x + d * t)).ok()?;
            let (v_new, g_new) = eval(&trial).ok()?;
            let gn_new = g_new.norm();
            let armijo = v_new <= value + 1e-4 * t * g.dot(d);
            // Below roundoff the value cannot resolve progress; accept steps that shrink the gradient.
            let roundoff = v_new <= value + 4.0 * f64::EPSILON * value.abs() && gn_new < gn;
            (armijo || roundoff).then_some((trial, v_new, g_new, gn_new))
        };
        if gn < opts.newton_threshold {
            if let Some(d) = newton(&x, &g).filter(|d| g.dot(d) < 0.0) {
                let mut t = 1.0;
                let mut found = None;
                while t > 1e-10 {
                    if let Some(r) = try_step(&d, t) {
                        found = Some(r);
                        break;
                    }
                    t *= 0.5;
                }
                if let Some((x_new, v_new, g_new, gn_new)) = found {
                    x = x_new;
                    value = v_new;
                    g = g_new;
                    gn = gn_new;
                    iterates.push(FlowIterate {
                        iteration: it,
                        value,
                        gradient_norm: gn,
                        step: t,
                        distance: (opts.distance_stride > 0 && it % opts.distance_stride == 0)
                            .then(|| distance(&x))
                            .flatten(),
                    });
                    continue;
                }
            }
        }
        let descent = -&g;
        let mut t = step;
        let accepted = loop {
            if t < 1e-20 {
                break None;
            }
            if let Some(r) = try_step(&descent, t) {
                break Some(r);
            }
            t *= 0.5;
        };
        let Some((x_new, v_new, g_new, gn_new)) = accepted else {
            abort_reason = Some(format!("step underflow at iteration {it} (gradient {gn:.3e})"));
            break;
        };
        // Barzilai–Borwein guess for the next trial step.
        let dx = &x_new - &x;
        let dg = &g_new - &g;
        let curvature = dx.dot(&dg);
        step = if curvature > 0.0 {
            (dx.norm_squared() / curvature).clamp(1e-6, 1.0)
        } else {
            (2.0 * t).min(1.0)
        };
        x = x_new;
        value = v_new;
        g = g_new;
        gn = gn_new;
        let record = opts.distance_stride > 0 && it % opts.distance_stride == 0;
        iterates.push(FlowIterate {
            iteration: it,
            value,
            gradient_norm: gn,
            step: t,
            distance: if record { distance(&x) } else { None },
        });
    }
    Ok(Descent {
        x,
        value,
        gradient_norm: gn,
        iterates,
        converged,
        abort_reason,
    })
}

/// Newton direction `P δ` with `(PᵀHP) δ = −Pᵀg`, eigenvalues clamped away from zero.
fn newton_direction(h: &DMatrix<f64>, p: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let reduced = p.tr_mul(&(h * p));
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = reduced.symmetric_eigen();
    let floor = 1e-10 * eig.eigenvalues.amax().max(1e-300);
    let rhs = eig.eigenvectors.tr_mul(&p.tr_mul(g));
    let delta = DVector::from_iterator(
        rhs.len(),
        rhs.iter().zip(eig.eigenvalues.iter()).map(|(r, l)| -r / l.abs().max(floor)),
    );
    let d = p * (&eig.eigenvectors * delta);
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Minimizes `Q̃` over `𝓑` from a positive start.
pub fn minimize_q(f: &Functional, v0: &BoundaryField, opts: &FlowOptions) -> Result<FlowTrajectory> {
    f.check_field(v0)?;
    f.positive_samples(&v0.coeffs)?;
    let eval = |c: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let state = crate::functional::ConstraintState {
            v: f.field(c.clone()),
            p_mass: 1.0,
        };
        Ok((f.eval_qtilde_coeffs(c)?, f.grad_qtilde(&state)?.coeffs))
    };
    let normalize = |c: &DVector<f64>| -> Result<DVector<f64>> { Ok(f.normalize_p(&f.field(c.clone()))?.v.coeffs) };
    let distance = |c: &DVector<f64>| distance_to_family(&f.field(c.clone()), NormTag::Hhalf).ok().map(|r| r.value);
    let newton = |c: &DVector<f64>, g: &DVector<f64>| -> Option<DVector<f64>> {
        let mo = f.moments(c).ok()?;
        let h = f.euclidean_hessian(c).ok()?;
        newton_direction(&h, &tangent_basis(&mo.s), g)
    };
    let d = descend(v0.coeffs.clone(), eval, normalize, distance, newton, opts)?;
    let final_field = f.field(d.x);
    let final_distance = distance_to_family(&final_field, NormTag::Hhalf).ok();
    Ok(FlowTrajectory {
        iterates: d.iterates,
        converged: d.converged,
        abort_reason: d.abort_reason,
        final_field,
        final_value: d.value,
        final_gradient: d.gradient_norm,
        final_distance,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositeTrajectory {
    pub iterates: Vec<FlowIterate>,
    pub converged: bool,
    pub abort_reason: Option<String>,
    pub final_field: InteriorField,
    pub final_value: f64,
}

/// Minimizes `Q(u₀ + Ev)` jointly over boundary and interior coefficients.
pub fn minimize_q_composite(f: &Functional, u: &InteriorField, opts: &FlowOptions) -> Result<CompositeTrajectory> {
    f.check_field(&u.v)?;
    let nb = f.len();
    let k = u.radial_count();
    let p = f.p();
    let split = |x: &DVector<f64>| -> InteriorField {
        let v = f.field(x.rows(0, nb).into_owned());
        let u0 = DMatrix::from_column_slice(nb, k, &x.as_slice()[nb..]);
        InteriorField { v, u0 }
    };
    let eval = |x: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let field = split(x);
        let mo = f.moments(&field.v.coeffs)?;
        let energy = field.interior_energy();
        let alpha = mo.mass.powf(-2.0 / p);
        let beta = alpha / mo.mass;
        let total = mo.numerator + energy;
        let gv = &mo.av * (2.0 * alpha) - &mo.s * (2.0 * total * beta);
        let gu = field.interior_energy_gradient() * alpha;
        let mut g = DVector::zeros(x.len());
        g.rows_mut(0, nb).copy_from(&gv);
        g.rows_mut(nb, nb * k).copy_from(&DVector::from_column_slice(gu.as_slice()));
        // Remove the normal component along (s, 0).
        let sn = mo.s.norm_squared();
        let t = mo.s.dot(&gv) / sn;
        let mut g_rows = g.rows_mut(0, nb);
        g_rows -= &mo.s * t;
        Ok((total * alpha, g))
    };
    let normalize = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let c = x.rows(0, nb).into_owned();
        f.positive_samples(&c)?;
        let m = f.p_mass_coeffs(&c);
        Ok(x * m.powf(-1.0 / p))
    };
    let mut x0 = DVector::zeros(nb * (k + 1));
    x0.rows_mut(0, nb).copy_from(&u.v.coeffs);
    x0.rows_mut(nb, nb * k).copy_from(&DVector::from_column_slice(u.u0.as_slice()));
    // Hessian of E in u0 (E is quadratic, so columns are gradients at unit coefficients).
    let energy_hessian = {
        let mut m = DMatrix::zeros(nb * k, nb * k);
        for j in 0..nb * k {
            let mut unit = DMatrix::zeros(nb, k);
            unit[j] = 1.0;
            let field = InteriorField {
                v: u.v.clone(),
                u0: unit,
            };
            m.set_column(j, &DVector::from_column_slice(field.interior_energy_gradient().as_slice()));
        }
        m
    };
    let newton = |x: &DVector<f64>, g: &DVector<f64>| -> Option<DVector<f64>> {
        let field = split(x);
        let mo = f.moments(&field.v.coeffs).ok()?;
        let m = mo.mass;
        let alpha = m.powf(-2.0 / p);
        let beta = alpha / m;
        let total = mo.numerator + field.interior_energy();
        let grad_e = DVector::from_column_slice(field.interior_energy_gradient().as_slice());
        let w = f.weight_matrix(&mo.samples);
        let cross = &mo.av * mo.s.transpose();
        let mut hvv = f.form() * (2.0 * alpha);
        hvv -= (&cross + cross.transpose()) * (4.0 * beta);
        hvv += &mo.s * mo.s.transpose() * (2.0 * (2.0 + p) * total * beta / m);
        hvv -= w * (2.0 * (p - 1.0) * total * beta);
        let huv = &grad_e * mo.s.transpose() * (-2.0 * beta);
        let size = nb * (k + 1);
        let mut h = DMatrix::zeros(size, size);
        h.view_mut((0, 0), (nb, nb)).copy_from(&hvv);
        h.view_mut((nb, 0), (nb * k, nb)).copy_from(&huv);
        h.view_mut((0, nb), (nb, nb * k)).copy_from(&huv.transpose());
        h.view_mut((nb, nb), (nb * k, nb * k)).copy_from(&(&energy_hessian * alpha));
        let t = tangent_basis(&mo.s);
        let mut basis = DMatrix::zeros(size, t.ncols() + nb * k);
        basis.view_mut((0, 0), (nb, t.ncols())).copy_from(&t);
        basis
            .view_mut((nb, t.ncols()), (nb * k, nb * k))
            .copy_from(&DMatrix::identity(nb * k, nb * k));
        newton_direction(&h, &basis, g)
    };
    let d = descend(x0, eval, normalize, |_| None, newton, opts)?;
    Ok(CompositeTrajectory {
        iterates: d.iterates,
        converged: d.converged,
        abort_reason: d.abort_reason,
        final_field: split(&d.x),
        final_value: d.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::flat_ball;
    use crate::minimizers::{Bubble, BubbleParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn flat(degree: usize) -> Functional {
        Functional::new(&flat_ball(3).unwrap(), degree).unwrap()
    }

    fn monotone(iterates: &[FlowIterate]) -> bool {
        iterates
            .windows(2)
            .all(|w| w[1].value <= w[0].value + 4.0 * f64::EPSILON * w[0].value.abs())
    }

    #[test]
    fn second_degree_start_converges() {
        let f = flat(6);
        let mut v = BoundaryField::constant(f.n(), 6, (4.0 * PI).powf(-0.25));
        v.coeffs[f.spectral().basis().position(2, 0).unwrap()] = 0.3;
        let tr = minimize_q(&f, &v, &FlowOptions::default()).unwrap();
        assert!(tr.converged, "{:?}", tr.abort_reason);
        assert!((tr.final_value - 8.0 * PI.sqrt()).abs() < 1e-6);
        assert!(tr.final_distance.unwrap().value < 1e-3);
        assert!(monotone(&tr.iterates));
    }

    #[test]
    fn bubble_start_stops_immediately() {
        let f = flat(16);
        let b = Bubble::new(f.n(), BubbleParams::from_pole(1.0, &[0.0, 3.0, 4.0]).unwrap()).unwrap();
        let tr = minimize_q(&f, &b.coefficients(16), &FlowOptions::default()).unwrap();
        assert!(tr.converged);
        assert_eq!(tr.iterates.len(), 1);
    }

    #[test]
    fn random_starts_reach_the_family() {
        let f = flat(4);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut c = DVector::from_fn(f.len(), |_, _| rng.random_range(-0.15..0.15));
            c[0] = 2.0;
            let tr = minimize_q(&f, &f.field(c), &FlowOptions::default()).unwrap();
            assert!(tr.converged, "seed {seed}: {:?}", tr.abort_reason);
            assert!((tr.final_value - 8.0 * PI.sqrt()).abs() < 1e-6);
            assert!(tr.final_distance.unwrap().value < 1e-3);
            assert!(monotone(&tr.iterates));
        }
    }

    #[test]
    fn composite_minimum_matches_boundary_minimum() {
        let f = flat(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = DVector::from_fn(f.len(), |_, _| rng.random_range(-0.1..0.1));
        c[0] = 2.0;
        let v = f.field(c);
        let u0 = DMatrix::from_fn(f.len(), 2, |_, _| rng.random_range(-0.3..0.3));
        let u = InteriorField::new(v.clone(), u0).unwrap();
        let comp = minimize_q_composite(&f, &u, &FlowOptions::default()).unwrap();
        let bdry = minimize_q(&f, &v, &FlowOptions::default()).unwrap();
        assert!(comp.converged, "{:?}", comp.abort_reason);
        assert!((comp.final_value - bdry.final_value).abs() < 1e-6);
        assert!(comp.final_field.u0.amax() < 1e-6);
        assert!(monotone(&comp.iterates));
    }
}
