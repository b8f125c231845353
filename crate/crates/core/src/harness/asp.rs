use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::operators::h_half_weights;
use crate::reduction::{linear_fit, ReductionContext};

pub const GAP_TIMES: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
pub const GAP_ALPHAS: [f64; 2] = [0.1, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub t: f64,
    pub deficit: f64,
    /// `‖u_t/‖u_t‖_p − v‖_{H^{1/2}}`.
    pub distance: f64,
    /// `deficit / distance^{p−α}`, one entry per α.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub order: usize,
    pub alphas: Vec<f64>,
    pub rows: Vec<GapRow>,
    /// Ratio decrease `r(t)/r(t/2)` per halving, one list per α.
    pub factors: Vec<Vec<f64>>,
    /// Log-log slope of the deficit against `t`.
    pub slope: f64,
    /// The deficit never leaves roundoff: `q` is constant along the ray.
    pub integrable: bool,
}

impl GapTable {
    /// Every halving lowers the ratio by at least `factor` for the given α.
    pub fn trend_holds(&self, alpha: f64, factor: f64) -> bool {
        self.alphas
            .iter()
            .position(|a| (a - alpha).abs() < 1e-12)
            .is_some_and(|k| !self.integrable && self.factors[k].iter().all(|f| *f >= factor))
    }

    pub fn min_factor(&self, alpha: f64) -> Option<f64> {
        let k = self.alphas.iter().position(|a| (a - alpha).abs() < 1e-12)?;
        Some(self.factors[k].iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// Deficit along `u_t = h(t v̂, F(t v̂))` against the `(p − α)` power of its distance to `v`.
pub fn asp_gap_probe(
    ctx: &ReductionContext,
    direction: &[f64],
    order: usize,
    times: &[f64],
    alphas: &[f64],
) -> Result<GapTable> {
    if direction.len() != ctx.kernel_dim() {
        return Err(LabError::SizeMismatch {
            what: "kernel direction",
            expected: ctx.kernel_dim(),
            found: direction.len(),
        });
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(LabError::InvalidArgument("zero kernel direction".into()));
    }
    let base = ctx.functional().base();
    let weights = h_half_weights(base.n(), base.degree());
    let v = ctx.critical_point();
    let q0 = ctx.critical_value();
    let p = order as f64;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let a: Vec<f64> = direction.iter().map(|x| x / norm * t).collect();
        let point = ctx.solve_graph(&a)?;
        let u = ctx.variety_point(&point);
        let unit = &u * base.p_mass_coeffs(&u).powf(-1.0 / base.p());
        let diff = unit - v;
        let distance = diff
            .iter()
            .zip(weights.iter())
            .map(|(x, w)| w * x * x)
            .sum::<f64>()
            .sqrt();
        let deficit = point.q - q0;
        rows.push(GapRow {
            t,
            deficit,
            distance,
            ratios: alphas.iter().map(|al| deficit / distance.powf(p - al)).collect(),
        });
    }
    let integrable = rows.iter().all(|r| r.deficit.abs() < 1e-9);
    let factors = (0..alphas.len())
        .map(|k| rows.windows(2).map(|w| w[0].ratios[k] / w[1].ratios[k]).collect())
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.deficit > 0.0)
        .map(|r| (r.t.ln(), r.deficit.ln()))
        .collect();
    let slope = if pts.len() >= 2 { linear_fit(&pts).0 } else { f64::NAN };
    Ok(GapTable {
        order,
        alphas: alphas.to_vec(),
        rows,
        factors,
        slope,
        integrable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Functional;
    use crate::geometry::flat_ball;
    use crate::harmonics::BoundaryField;
    use crate::reduction::{PlantedForm, PlantedFunctional, ReductionOptions};

    fn flat() -> (Functional, crate::functional::ConstraintState) {
        let f = Functional::new(&flat_ball(3).unwrap(), 4).unwrap();
        let s = f.normalize_p(&BoundaryField::constant(f.n(), 4, 1.0)).unwrap();
        (f, s)
    }

    #[test]
    fn flat_ball_short_circuits() {
        let (f, s) = flat();
        let ctx = ReductionContext::new(&f, &s, ReductionOptions::default()).unwrap();
        let g = asp_gap_probe(&ctx, &[1.0, 0.0, 0.0], 3, &GAP_TIMES, &GAP_ALPHAS).unwrap();
        assert!(g.integrable);
        assert!(!g.trend_holds(0.5, 1.0));
    }

    #[test]
    fn planted_quartic_slope() {
        let (f, s) = flat();
        let pf = PlantedFunctional::new(f, &s, PlantedForm::RadialQuartic { sigma: 10.0 }).unwrap();
        let ctx = ReductionContext::new(&pf, &s, ReductionOptions::default()).unwrap();
        let g = asp_gap_probe(&ctx, &[0.0, 0.0, 1.0], 4, &GAP_TIMES, &GAP_ALPHAS).unwrap();
        assert!((g.slope - 4.0).abs() < 0.1, "{}", g.slope);
    }

    /// With the deficit of order `t^p` and the distance of order `t`, the
    /// ratio scales as `t^α`: each halving divides it by about `2^α`.
    #[test]
    fn planted_cubic_ratio_scaling() {
        let (f, s) = flat();
        let d = [0.48, 0.6, 0.64];
        let pf = PlantedFunctional::new(
            f,
            &s,
            PlantedForm::Power {
                sigma: 2.0,
                direction: d.to_vec(),
                order: 3,
            },
        )
        .unwrap();
        let ctx = ReductionContext::new(&pf, &s, ReductionOptions::default()).unwrap();
        let g = asp_gap_probe(&ctx, &d, 3, &GAP_TIMES, &GAP_ALPHAS).unwrap();
        assert!((g.slope - 3.0).abs() < 0.1);
        for f in &g.factors[1] {
            assert!((f - 0.5f64.exp2()).abs() < 0.05, "{f}");
        }
    }
}
