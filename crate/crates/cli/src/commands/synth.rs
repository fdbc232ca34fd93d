use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use lattice_vae::data::{synth_dataset, write_idx, RawImages};
use serde::{Deserialize, Serialize};

use crate::config::{persist, resolve, usage};
use crate::data::default_out;
use crate::Status;

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Number of images.
    #[arg(long)]
    n: Option<usize>,
    /// Pixels per image; square images when this is a perfect square.
    #[arg(long)]
    d: Option<usize>,
    /// Number of prototype bias vectors.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SynthSettings {
    #[serde(default = "n")]
    n: usize,
    #[serde(default = "d")]
    d: usize,
    #[serde(default = "k")]
    k: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "synth_out")]
    out: PathBuf,
}

fn n() -> usize {
    512
}
fn d() -> usize {
    64
}
fn k() -> usize {
    4
}
fn synth_out() -> PathBuf {
    default_out("synth")
}

/// Pixels are stored as 0 or 255, so every binarization reads them back
/// unchanged.
pub fn synth(file: Option<&Path>, args: SynthArgs) -> Result<Status> {
    let s: SynthSettings = resolve(file, "synth", &args)?;
    let data = synth_dataset(s.n, s.d, s.k, s.seed).map_err(|e| usage(e.to_string()))?;
    persist(&s.out, "synth", &s)?;
    let raw = RawImages {
        n: data.n,
        rows: data.height,
        cols: data.width,
        pixels: data.images.iter().map(|&p| p * 255).collect(),
        provenance: data.provenance.clone(),
    };
    let path = s.out.join("images.idx");
    write_idx(&path, &raw)?;
    println!(
        "wrote {} images of {}×{} to {} (pixel mean {:.4})",
        data.n,
        data.height,
        data.width,
        path.display(),
        data.pixel_mean()
    );
    Ok(Status::Pass)
}
