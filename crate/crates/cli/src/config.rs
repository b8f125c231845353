use std::path::{Path, PathBuf};

use escobar_lab::geometry::{conformal_ball, flat_ball, ModelGeometry};
use escobar_lab::harmonics::BoundaryField;
use escobar_lab::harness::FlowOptions;
use escobar_lab::minimizers::NormTag;
use escobar_lab::reduction::{PlantedForm, ReductionOptions, TaylorOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometrySpec {
    FlatBall,
    /// Metric `w^{4/(n-2)} δ` with `w` the harmonic extension of the given boundary data.
    ConformalBall { w_coeffs: BoundaryField },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeConfig {
    /// Amplitude of the random start perturbation around the constant.
    pub perturbation: f64,
    /// Start field file; overrides the random start.
    pub start: Option<PathBuf>,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub distance_stride: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            perturbation: 0.1,
            start: None,
            max_iterations: 10_000,
            gradient_tolerance: 1e-9,
            distance_stride: 50,
        }
    }
}

impl MinimizeConfig {
    pub fn flow(&self) -> FlowOptions {
        FlowOptions {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            distance_stride: self.distance_stride,
            ..FlowOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub samples: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    pub stratify: bool,
    /// Also run the composite interior sweep.
    pub interior: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            eps_min: 1e-3,
            eps_max: 0.3,
            stratify: false,
            interior: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ReduceConfig {
    pub planted: Option<PlantedForm>,
    pub options: ReductionOptions,
    pub taylor: TaylorOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceConfig {
    /// JSON file holding a boundary field or bubble parameters.
    pub input: Option<PathBuf>,
    pub tag: NormTag,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            input: None,
            tag: NormTag::Hhalf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Criteria to run; empty means all eleven.
    pub criteria: Vec<usize>,
}

/// Everything a command depends on; outputs are a function of this value alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub degree: usize,
    pub geometry: GeometrySpec,
    pub seed: u64,
    pub out: PathBuf,
    pub minimize: MinimizeConfig,
    pub sweep: SweepConfig,
    pub reduce: ReduceConfig,
    pub distance: DistanceConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 3,
            degree: 8,
            geometry: GeometrySpec::FlatBall,
            seed: 42,
            out: PathBuf::from("out"),
            minimize: MinimizeConfig::default(),
            sweep: SweepConfig::default(),
            reduce: ReduceConfig::default(),
            distance: DistanceConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn geometry(&self) -> Result<ModelGeometry, CliError> {
        let g = match &self.geometry {
            GeometrySpec::FlatBall => flat_ball(self.n),
            GeometrySpec::ConformalBall { w_coeffs } => conformal_ball(self.n, w_coeffs.clone()),
        };
        g.map_err(|e| CliError::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
