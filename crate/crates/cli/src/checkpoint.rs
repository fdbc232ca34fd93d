//! Versioned JSON checkpoint holding everything needed to evaluate a model.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lattice_vae::vae::{ModelParams, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::data::DataSource;

pub const FORMAT: &str = "latvae-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub params: ModelParams,
    pub train: TrainConfig,
    /// How the training data was read, so evaluation sees the same split.
    pub data: DataSource,
    pub data_provenance: String,
}

impl Checkpoint {
    pub fn new(
        params: ModelParams,
        train: TrainConfig,
        data: DataSource,
        provenance: String,
    ) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            params,
            train,
            data,
            data_provenance: provenance,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let ck: Checkpoint = serde_json::from_str(&text)
            .with_context(|| format!("{} is not a valid checkpoint", path.display()))?;
        if ck.format != FORMAT {
            bail!("{} is not a {FORMAT} file", path.display());
        }
        if ck.version != VERSION {
            bail!(
                "unsupported checkpoint version {} (expected {VERSION})",
                ck.version
            );
        }
        ck.params
            .validate()
            .context("checkpoint parameters are inconsistent")?;
        Ok(ck)
    }
}
