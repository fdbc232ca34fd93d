mod geometry;
mod model;
mod synth;
mod verify;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::Status;

#[derive(Debug, Parser)]
#[command(
    name = "latvae",
    version,
    about = "Dithered lattice quantization for discrete latent models"
)]
pub struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every command.
#[derive(Debug, Args)]
struct Common {
    /// TOML file with the command's settings; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo cell constants (volume, second moment, NSM).
    Constants(geometry::ConstantsArgs),
    /// Theta-series coefficients by enumeration.
    Theta(geometry::ThetaArgs),
    /// Numerical verification suites; exit 1 if any check fails.
    Verify {
        #[command(subcommand)]
        suite: verify::Suite,
    },
    /// Train a linear lattice VAE on an IDX image file.
    Train(model::TrainArgs),
    /// Quantized-inference likelihood of a checkpoint.
    Eval(model::EvalArgs),
    /// Emit the lattice codes of a dataset.
    Quantize(model::QuantizeArgs),
    /// Write a synthetic binary image set as an IDX file.
    Synth(synth::SynthArgs),
}

impl Cli {
    pub fn run(self) -> Result<Status> {
        let file = self.common.config.as_deref();
        match self.command {
            Command::Constants(a) => geometry::constants(file, a),
            Command::Theta(a) => geometry::theta(file, a),
            Command::Verify { suite } => verify::run(file, suite),
            Command::Train(a) => model::train(file, a),
            Command::Eval(a) => model::eval(file, a),
            Command::Quantize(a) => model::quantize(file, a),
            Command::Synth(a) => synth::synth(file, a),
        }
    }
}

fn all_lattices() -> Vec<lattice_vae::lattice::LatticeKind> {
    lattice_vae::lattice::LatticeKind::ALL.to_vec()
}

/// Position of a lattice in the canonical order, used to derive seeds that
/// do not depend on which lattices a run selects.
fn lattice_index(kind: lattice_vae::lattice::LatticeKind) -> u64 {
    lattice_vae::lattice::LatticeKind::ALL
        .iter()
        .position(|&k| k == kind)
        .expect("known lattice") as u64
}
