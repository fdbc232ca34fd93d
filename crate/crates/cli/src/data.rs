//! Reading datasets from IDX files for the training and evaluation commands.

use std::path::{Path, PathBuf};

use anyhow::Result;
use lattice_vae::data::{binarize, load_idx, BinarizeMode, Dataset};
use serde::{Deserialize, Serialize};

use crate::config::usage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binarize {
    ThresholdHalf,
    Bernoulli,
    Prebinarized,
}

impl std::str::FromStr for Binarize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "threshold_half" => Ok(Binarize::ThresholdHalf),
            "bernoulli" => Ok(Binarize::Bernoulli),
            "prebinarized" => Ok(Binarize::Prebinarized),
            other => Err(format!(
                "unknown binarization `{other}` (expected threshold_half, bernoulli or prebinarized)"
            )),
        }
    }
}

/// Everything that determines the binary dataset read from an IDX file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub binarize: Binarize,
    /// Seed of the Bernoulli draws.
    pub binarize_seed: u64,
    pub split_seed: u64,
}

impl DataSource {
    pub fn mode(&self) -> BinarizeMode {
        match self.binarize {
            Binarize::ThresholdHalf => BinarizeMode::ThresholdHalf,
            Binarize::Bernoulli => BinarizeMode::Bernoulli {
                seed: self.binarize_seed,
            },
            Binarize::Prebinarized => BinarizeMode::Prebinarized,
        }
    }

    pub fn load(&self, path: Option<&Path>) -> Result<Dataset> {
        let path = require_path(path, "dataset")?;
        let raw = load_idx(path)?;
        Ok(binarize(&raw, self.mode(), self.split_seed)?)
    }
}

/// A path that must be given and must exist; anything else is a usage error.
pub fn require_path<'a>(path: Option<&'a Path>, what: &str) -> Result<&'a Path> {
    let path = path.ok_or_else(|| usage(format!("no {what} path given")))?;
    if !path.exists() {
        return Err(usage(format!("{what} {} does not exist", path.display())));
    }
    Ok(path)
}

pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from("runs").join(command)
}
