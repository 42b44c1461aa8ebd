//! Run configuration: one JSON document describing the tensor, the
//! constraint form, the optimization sense and the solver parameters.
//! Command-line flags override individual fields.

use std::fs;
use std::path::{Path, PathBuf};

use beigen::{gen_bform, gen_tensor, BForm, BGenSpec, GenSpec, Sense, SolveConfig, SymTensor};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::files::parse_tensor_file;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorSource {
    File { path: PathBuf },
    Generated(GenSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub tensor: TensorSource,
    pub bform: BGenSpec,
    #[serde(default = "default_sense")]
    pub sense: Sense,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolveConfig,
}

fn default_sense() -> Sense {
    Sense::Maximize
}

fn default_trials() -> usize {
    100
}

/// Field overrides supplied as command-line flags.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub sense: Option<Sense>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        self.solver
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(v) = ov.trials {
            self.trials = v;
        }
        if let Some(v) = ov.seed {
            self.seed = v;
        }
        if let Some(v) = ov.sense {
            self.sense = v;
        }
        if let Some(v) = ov.tol {
            self.solver.tol = v;
        }
        if let Some(v) = ov.max_iter {
            self.solver.max_iter = v;
        }
    }

    /// Materializes the tensor and constraint form. A zero `dim` on the
    /// form spec inherits the tensor dimension.
    pub fn build_instance(&self) -> Result<(SymTensor, BForm)> {
        let tensor = match &self.tensor {
            TensorSource::File { path } => parse_tensor_file(path)?,
            TensorSource::Generated(spec) => gen_tensor(spec)?,
        };
        let mut bspec = self.bform;
        if bspec.dim == 0 {
            bspec.dim = tensor.dim();
        } else if bspec.dim != tensor.dim() {
            return Err(CliError::Config(format!(
                "constraint form dimension {} does not match tensor dimension {}",
                bspec.dim,
                tensor.dim()
            )));
        }
        let bform = gen_bform(&bspec)?;
        Ok((tensor, bform))
    }
}
