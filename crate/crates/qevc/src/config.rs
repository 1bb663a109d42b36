//! Run configuration: a single JSON document, with every key overridable
//! from the command line.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::krylov::WeightSchedule;
use crate::lattice::CvpMethod;
use crate::models::{
    build_random_hermitian, build_spin_chain, Boundary, Ensemble, HermitianOperator,
};
use crate::nielsen::SolverOptions;

/// Built-in model menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Gue,
    Goe,
    Ising,
    File,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub family: ModelFamily,
    /// Hilbert-space dimension for the random ensembles.
    pub dim: Option<usize>,
    pub seed: u64,
    /// Ising chain length (D = 2^sites).
    pub sites: Option<usize>,
    pub gx: f64,
    pub gz: f64,
    pub boundary: Boundary,
    /// Hamiltonian JSON for `family = file`.
    pub path: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            family: ModelFamily::Gue,
            dim: None,
            seed: 0,
            sites: None,
            gx: 0.0,
            gz: 0.0,
            boundary: Boundary::Open,
            path: None,
        }
    }
}

/// Seed state: a computational-basis index (default 0) or a state file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedStateConfig {
    pub basis_index: Option<usize>,
    pub file: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Either the name `linear` (w_j = j) or an explicit nondecreasing list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsConfig {
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig::Named("linear".to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGridConfig {
    pub tmax: Option<f64>,
    pub points: usize,
}

impl Default for TimeGridConfig {
    fn default() -> Self {
        Self {
            tmax: None,
            points: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// `exact` or `babai`; unset picks exact up to the enumeration cap.
    pub method: Option<CvpMethod>,
    pub delta: f64,
    pub enum_cap: usize,
    pub ridge: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: None,
            delta: crate::lattice::DEFAULT_LLL_DELTA,
            enum_cap: crate::lattice::DEFAULT_ENUM_CAP,
            ridge: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub samples: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Primary artifact (JSON report, or the CSV for `spectrum`).
    pub report: Option<PathBuf>,
    /// Trace CSV; derived from `report` when unset.
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub v0: SeedStateConfig,
    pub weights: WeightsConfig,
    pub time_grid: TimeGridConfig,
    pub solver: SolverConfig,
    pub mc: McConfig,
    pub output: OutputConfig,
    pub threads: Option<usize>,
    pub dump_basis: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::Config(format!(
                "cannot read config {}: {e}",
                path.as_ref().display()
            ))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad config {}: {e}", path.as_ref().display())))
    }

    pub fn build_model(&self) -> Result<HermitianOperator> {
        match self.model.family {
            ModelFamily::Gue => {
                let dim = self
                    .model
                    .dim
                    .ok_or_else(|| Error::Config("gue model needs --dim".into()))?;
                build_random_hermitian(dim, Ensemble::ComplexHermitian, self.model.seed)
            }
            ModelFamily::Goe => {
                let dim = self
                    .model
                    .dim
                    .ok_or_else(|| Error::Config("goe model needs --dim".into()))?;
                build_random_hermitian(dim, Ensemble::RealSymmetric, self.model.seed)
            }
            ModelFamily::Ising => {
                let sites = self
                    .model
                    .sites
                    .ok_or_else(|| Error::Config("ising model needs --sites".into()))?;
                build_spin_chain(sites, self.model.gx, self.model.gz, self.model.boundary)
            }
            ModelFamily::File => {
                let path = self
                    .model
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("file model needs --path".into()))?;
                HermitianOperator::from_json_file(path)
            }
        }
    }

    pub fn build_seed_state(&self, dim: usize) -> Result<DVector<Complex64>> {
        match (&self.v0.basis_index, &self.v0.file) {
            (Some(_), Some(_)) => Err(Error::Config(
                "seed state: give either basis_index or file, not both".into(),
            )),
            (idx, None) => {
                let idx = idx.unwrap_or(0);
                if idx >= dim {
                    return Err(Error::Config(format!(
                        "seed basis index {idx} out of range for dimension {dim}"
                    )));
                }
                let mut v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
                v[idx] = Complex64::new(1.0, 0.0);
                Ok(v)
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read seed state {}: {e}", path.display()))
                })?;
                let file: StateFile = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("bad seed state file: {e}")))?;
                if file.re.len() != dim || file.im.len() != dim {
                    return Err(Error::Config(format!(
                        "seed state length {} does not match dimension {dim}",
                        file.re.len()
                    )));
                }
                Ok(DVector::from_iterator(
                    dim,
                    file.re
                        .iter()
                        .zip(file.im.iter())
                        .map(|(&r, &i)| Complex64::new(r, i)),
                ))
            }
        }
    }

    /// Weight schedule long enough for any Krylov dimension up to `max_len`.
    pub fn weight_schedule(&self, max_len: usize) -> Result<WeightSchedule> {
        match &self.weights {
            WeightsConfig::Named(name) if name == "linear" => {
                Ok(WeightSchedule::linear(max_len.max(1)))
            }
            WeightsConfig::Named(other) => Err(Error::Config(format!(
                "unknown weight schedule '{other}' (expected 'linear' or an explicit list)"
            ))),
            WeightsConfig::Explicit(values) => WeightSchedule::new(values.clone()),
        }
    }

    /// Solver options with the method defaulted by dimension: exact within
    /// the enumeration cap, Babai beyond it.
    pub fn solver_options(&self, dim: usize) -> SolverOptions {
        let method = self.solver.method.unwrap_or(if dim <= self.solver.enum_cap {
            CvpMethod::Exact
        } else {
            CvpMethod::Babai
        });
        SolverOptions {
            method,
            lll_delta: self.solver.delta,
            enum_cap: self.solver.enum_cap,
            ridge: self.solver.ridge,
        }
    }

    /// Trace output path: explicit, or derived from the report path by
    /// swapping the extension to `.csv`.
    pub fn trace_path(&self) -> Option<PathBuf> {
        self.output
            .trace
            .clone()
            .or_else(|| self.output.report.as_ref().map(|p| p.with_extension("csv")))
    }
}

/// Parse a `--weights` argument: `linear` or a comma-separated list.
pub fn parse_weights_arg(arg: &str) -> Result<WeightsConfig> {
    if arg == "linear" {
        return Ok(WeightsConfig::Named("linear".into()));
    }
    let values: std::result::Result<Vec<f64>, _> =
        arg.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(WeightsConfig::Explicit(v)),
        _ => Err(Error::Config(format!(
            "cannot parse weights '{arg}': expected 'linear' or w0,w1,..."
        ))),
    }
}
