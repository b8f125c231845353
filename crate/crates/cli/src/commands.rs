use std::path::PathBuf;

use escobar_lab::functional::{BoundaryFunctional, ConstraintState, Functional};
use escobar_lab::harmonics::BoundaryField;
use escobar_lab::harness::{interior_sweep, minimize_q, stability_sweep, InteriorSweepOptions, SweepOptions};
use escobar_lab::minimizers::{distance_to_family, Bubble, BubbleParams};
use escobar_lab::operators::dtn_matrix;
use escobar_lab::reduction::{projected_gradient_norm, reduce, PlantedFunctional, CRITICAL_TOLERANCE};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{read_json, Output};
use crate::verify;

fn functional(config: &RunConfig) -> Result<Functional, CliError> {
    let geom = config.geometry()?;
    Functional::new(&geom, config.degree).map_err(|e| CliError::Config(e.to_string()))
}

fn constant_state(f: &Functional) -> Result<ConstraintState, CliError> {
    Ok(f.normalize_p(&BoundaryField::constant(f.n(), f.degree(), 1.0))?)
}

/// The normalized constant when it is critical, otherwise the minimizer reached from it.
fn reference_state(f: &Functional, config: &RunConfig) -> Result<ConstraintState, CliError> {
    let state = constant_state(f)?;
    if projected_gradient_norm(f, &state.v.coeffs)? < CRITICAL_TOLERANCE {
        return Ok(state);
    }
    let tr = minimize_q(f, &state.v, &config.minimize.flow())?;
    if !tr.converged {
        return Err(CliError::Numerical(escobar_lab::LabError::NotCritical {
            gradient_norm: tr.final_gradient,
        }));
    }
    Ok(f.normalize_p(&tr.final_field)?)
}

#[derive(Serialize)]
struct DtnRow {
    index: usize,
    l: usize,
    k: usize,
    m: i64,
    dtn: f64,
}

#[derive(Serialize)]
struct EigenRow {
    index: usize,
    eigenvalue: f64,
}

/// DtN diagonal, Hessian spectrum and kernel dimension.
pub fn cmd_spectrum(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let f = functional(config)?;
    let mut out = Output::new(config)?;
    let dtn = dtn_matrix(f.geometry(), f.spectral())?;
    let rows: Vec<DtnRow> = f
        .spectral()
        .basis()
        .indices()
        .iter()
        .zip(dtn.diagonal().iter())
        .enumerate()
        .map(|(index, (ix, d))| DtnRow {
            index,
            l: ix.l,
            k: ix.k,
            m: ix.m,
            dtn: *d,
        })
        .collect();
    out.csv("dtn.csv", &rows)?;
    let state = reference_state(&f, config)?;
    let hess = f.hessian_qtilde(&state)?;
    let eig: Vec<EigenRow> = hess
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(index, v)| EigenRow { index, eigenvalue: *v })
        .collect();
    out.csv("hessian_eigenvalues.csv", &eig)?;
    let summary = json!({
        "n": config.n,
        "L": config.degree,
        "basis_size": f.len(),
        "qtilde": f.eval_qtilde(&state.v)?,
        "kernel_dim": hess.kernel_dim(),
        "dtn_max_off_diagonal": dtn.max_off_diagonal(),
        "dtn_asymmetry": dtn.asymmetry(),
        "hessian_symmetry_residual": hess.symmetry_residual(),
    });
    out.json("spectrum.json", &summary)?;
    Ok(out.written().to_vec())
}

/// Projected-gradient minimization from a seeded random positive start or a field file.
pub fn cmd_minimize(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let f = functional(config)?;
    let start = match &config.minimize.start {
        Some(path) => {
            let v: BoundaryField = read_json(path)?;
            if v.degree != config.degree {
                v.resized(config.degree)
            } else {
                v
            }
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut c = constant_state(&f)?.v.coeffs;
            let amp = config.minimize.perturbation;
            for x in c.iter_mut().skip(1) {
                *x += rng.random_range(-amp..=amp);
            }
            f.field(c)
        }
    };
    let tr = minimize_q(&f, &start, &config.minimize.flow())?;
    let mut out = Output::new(config)?;
    out.csv("trajectory.csv", &tr.iterates)?;
    out.json("minimizer.json", &tr.final_field)?;
    let summary = json!({
        "converged": tr.converged,
        "abort_reason": tr.abort_reason,
        "iterations": tr.iterates.last().map_or(0, |it| it.iteration),
        "final_value": tr.final_value,
        "final_gradient": tr.final_gradient,
        "final_distance": tr.final_distance,
        "gap_to_ball_constant": tr.final_value - f.n().ball_sobolev_quotient(),
    });
    out.json("minimize_summary.json", &summary)?;
    Ok(out.written().to_vec())
}

/// Stability sweep on the flat ball; optionally the composite interior sweep.
pub fn cmd_sweep(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let f = functional(config)?;
    let s = &config.sweep;
    let opts = SweepOptions {
        samples: s.samples,
        seed: config.seed,
        eps_min: s.eps_min,
        eps_max: s.eps_max,
        stratify: s.stratify,
    };
    let result = stability_sweep(&f, &opts)?;
    let mut out = Output::new(config)?;
    out.csv("sweep.csv", &result.records)?;
    out.json(
        "sweep_summary.json",
        &json!({ "samples": result.records.len(), "fit": result.fit }),
    )?;
    if s.interior {
        let r = interior_sweep(
            &f,
            &InteriorSweepOptions {
                boundary: opts,
                ..InteriorSweepOptions::default()
            },
        )?;
        out.csv("interior.csv", &r.records)?;
        out.json("interior_summary.json", &r.summary)?;
    }
    Ok(out.written().to_vec())
}

#[derive(Serialize)]
struct SampleRow {
    kind: &'static str,
    radius: f64,
    q: f64,
    deficit: f64,
    residual: f64,
    iterations: usize,
    /// Kernel coordinates separated by spaces.
    a: String,
}

/// Lyapunov–Schmidt reduction at the reference state, with an optional planted term.
pub fn cmd_reduce(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let f = functional(config)?;
    let state = reference_state(&f, config)?;
    let rc = &config.reduce;
    let planted;
    let target: &dyn BoundaryFunctional = match &rc.planted {
        Some(form) => {
            planted = PlantedFunctional::new(f.clone(), &state, form.clone())?;
            &planted
        }
        None => &f,
    };
    let r = reduce(target, &state, rc.options.clone(), &rc.taylor, config.seed)?;
    let mut out = Output::new(config)?;
    let rows: Vec<SampleRow> = [("taylor", &r.taylor_samples), ("lojasiewicz", &r.lojasiewicz_samples)]
        .into_iter()
        .flat_map(|(kind, pts)| {
            pts.iter().map(move |p| SampleRow {
                kind,
                radius: p.a.iter().map(|v| v * v).sum::<f64>().sqrt(),
                q: p.q,
                deficit: p.q - r.critical_value,
                residual: p.residual,
                iterations: p.iterations,
                a: p.a.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" "),
            })
        })
        .collect();
    out.csv("reduction_samples.csv", &rows)?;
    out.json("reduction.json", &r)?;
    Ok(out.written().to_vec())
}

/// Distance input file: coefficients or bubble parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistanceFile {
    Field(BoundaryField),
    Bubble(BubbleParams),
}

pub fn cmd_distance(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let path = config
        .distance
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("distance.input is required".into()))?;
    let v = match read_json::<DistanceFile>(path)? {
        DistanceFile::Field(v) => v,
        DistanceFile::Bubble(p) => {
            let n = escobar_lab::Dimension::new(config.n).map_err(|e| CliError::Config(e.to_string()))?;
            Bubble::new(n, p)?.coefficients(config.degree)
        }
    };
    let report = distance_to_family(&v, config.distance.tag)?;
    let mut out = Output::new(config)?;
    out.json("distance.json", &report)?;
    Ok(out.written().to_vec())
}

/// Runs the acceptance criteria; fails with exit class 4 when any check fails.
pub fn cmd_verify(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let ids: Vec<usize> = if config.verify.criteria.is_empty() {
        (1..=verify::CRITERIA).collect()
    } else {
        config.verify.criteria.clone()
    };
    if let Some(bad) = ids.iter().find(|i| !(1..=verify::CRITERIA).contains(*i)) {
        return Err(CliError::Config(format!("no acceptance criterion {bad}")));
    }
    let mut out = Output::new(config)?;
    let scratch = out.path("verify_scratch");
    let mut outcomes = Vec::new();
    for id in ids {
        let outcome = verify::run_criterion(id, config.seed, &scratch);
        println!("{}", outcome.line());
        outcomes.push(outcome);
    }
    out.json("verify.json", &outcomes)?;
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    if failed.is_empty() {
        Ok(out.written().to_vec())
    } else {
        Err(CliError::Acceptance(format!("criteria {} failed", failed.join(", "))))
    }
}

/// Random coefficients around the constant, for tests and examples.
pub fn random_positive_field(f: &Functional, rng: &mut ChaCha8Rng, amplitude: f64) -> BoundaryField {
    loop {
        let mut c = DVector::from_fn(f.len(), |_, _| rng.random_range(-amplitude..=amplitude));
        c[0] = 2.0;
        if f.positive_samples(&c).is_ok() {
            return f.field(c);
        }
    }
}
