//! JSON run configuration shared by the CLI subcommands.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::TrainingConfig;
use crate::error::{Error, Result};
use crate::features::FiltrationBank;
use crate::vectorize::SamplingConfig;

/// Either a preset name (`"MN40"`, `"FULL57"`) or an explicit bank
/// `{"name": ..., "specs": ["height:1,0,0", ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BankConfig {
    Preset(String),
    Custom(FiltrationBank),
}

impl BankConfig {
    pub fn resolve(&self) -> Result<FiltrationBank> {
        match self {
            BankConfig::Preset(name) => FiltrationBank::preset(name),
            BankConfig::Custom(bank) => FiltrationBank::custom(bank.name.clone(), bank.specs.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Voxel edge length in model units.
    pub voxel_size: f64,
    pub bank: BankConfig,
    pub sampling: SamplingConfig,
    /// Drop never-dying classes before vectorizing instead of capping
    /// their death at the image maximum.
    pub drop_essential: bool,
    pub training: TrainingConfig,
    pub workers: usize,
    pub seed: u64,
    /// Points drawn from each `.off` mesh.
    pub mesh_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            voxel_size: 0.05,
            bank: BankConfig::Preset("MN40".into()),
            sampling: SamplingConfig::default(),
            drop_essential: false,
            training: TrainingConfig::default(),
            workers: 1,
            seed: 0,
            mesh_samples: 2048,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Compact single-line JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::Invalid(format!("voxel_size must be positive, got {}", self.voxel_size)));
        }
        if self.workers == 0 {
            return Err(Error::Invalid("workers must be at least 1".into()));
        }
        if self.mesh_samples == 0 {
            return Err(Error::Invalid("mesh_samples must be positive".into()));
        }
        self.bank.resolve()?;
        self.sampling.validate()?;
        self.training.validate()
    }
}
