use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use lattice_vae::lattice::{
    cell_constants, theta_closed_form, theta_coefficients, LatticeBasis, LatticeKind,
    ScaledProductLattice,
};
use lattice_vae::rng::stream;
use serde::{Deserialize, Serialize};

use super::{all_lattices, lattice_index};
use crate::config::{persist, resolve};
use crate::data::default_out;
use crate::report::{write_csv, write_json};
use crate::Status;

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    /// Lattices to measure (comma separated); all four by default.
    #[arg(long = "lattice", value_delimiter = ',')]
    lattices: Option<Vec<LatticeKind>>,
    /// Dither samples per lattice.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConstantsSettings {
    #[serde(default = "all_lattices")]
    lattices: Vec<LatticeKind>,
    #[serde(default = "million")]
    samples: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "constants_out")]
    out: PathBuf,
}

fn million() -> usize {
    1_000_000
}

fn constants_out() -> PathBuf {
    default_out("constants")
}

#[derive(Debug, Serialize)]
struct ConstantsRow {
    lattice: LatticeKind,
    dim: usize,
    volume: f64,
    second_moment: f64,
    second_moment_stderr: f64,
    nsm: f64,
    nsm_stderr: f64,
    exact_nsm: f64,
    published_nsm: f64,
    n_samples: usize,
    seed: u64,
}

pub fn constants(file: Option<&Path>, args: ConstantsArgs) -> Result<Status> {
    let s: ConstantsSettings = resolve(file, "constants", &args)?;
    persist(&s.out, "constants", &s)?;
    let mut rows = Vec::new();
    println!(
        "{:<4} {:>8} {:>14} {:>10} {:>10} {:>10}",
        "", "volume", "second moment", "NSM", "± stderr", "published"
    );
    for &kind in &s.lattices {
        let basis = LatticeBasis::new(kind);
        let lattice = ScaledProductLattice::unit(kind);
        let c = cell_constants(
            &lattice,
            s.samples,
            &mut stream(s.seed, lattice_index(kind)),
        )?;
        println!(
            "{:<4} {:>8.5} {:>14.6} {:>10.5} {:>10.5} {:>10}",
            kind.name(),
            c.volume,
            c.second_moment,
            c.nsm,
            c.nsm_stderr,
            basis.published_nsm()
        );
        rows.push(ConstantsRow {
            lattice: kind,
            dim: kind.dim(),
            volume: c.volume,
            second_moment: c.second_moment,
            second_moment_stderr: c.stderr,
            nsm: c.nsm,
            nsm_stderr: c.nsm_stderr,
            exact_nsm: basis.exact_nsm(),
            published_nsm: basis.published_nsm(),
            n_samples: c.n_samples,
            seed: s.seed,
        });
    }
    write_json(&s.out.join("constants.json"), &rows)?;
    write_csv(&s.out.join("constants.csv"), &rows)?;
    Ok(Status::Pass)
}

#[derive(Debug, Args, Serialize)]
pub struct ThetaArgs {
    /// Lattices to enumerate (comma separated); all four by default.
    #[arg(long = "lattice", value_delimiter = ',')]
    lattices: Option<Vec<LatticeKind>>,
    /// Largest squared norm to count.
    #[arg(long)]
    max_norm: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ThetaSettings {
    #[serde(default = "all_lattices")]
    lattices: Vec<LatticeKind>,
    #[serde(default = "sixteen")]
    max_norm: u64,
    #[serde(default = "theta_out")]
    out: PathBuf,
}

fn sixteen() -> u64 {
    16
}

fn theta_out() -> PathBuf {
    default_out("theta")
}

#[derive(Debug, Serialize)]
struct ThetaRow {
    lattice: LatticeKind,
    norm_sq: u64,
    count: u64,
    /// Count from the divisor-sum formula, an independent check.
    closed_form: u64,
}

/// Fails if enumeration and the closed form ever disagree.
pub fn theta(file: Option<&Path>, args: ThetaArgs) -> Result<Status> {
    let s: ThetaSettings = resolve(file, "theta", &args)?;
    persist(&s.out, "theta", &s)?;
    let mut rows = Vec::new();
    for &kind in &s.lattices {
        let counts = theta_coefficients(&LatticeBasis::new(kind), s.max_norm)?;
        let closed = theta_closed_form(kind, s.max_norm);
        for (k, &c) in closed.iter().enumerate() {
            let count = counts.get(&(k as u64)).copied().unwrap_or(0);
            if count > 0 || c > 0 {
                rows.push(ThetaRow {
                    lattice: kind,
                    norm_sq: k as u64,
                    count,
                    closed_form: c,
                });
            }
        }
        let series: Vec<String> = counts.iter().map(|(k, c)| format!("{k}:{c}")).collect();
        println!("{:<3} {}", kind.name(), series.join(" "));
    }
    write_json(&s.out.join("theta.json"), &rows)?;
    write_csv(&s.out.join("theta.csv"), &rows)?;
    let mismatched: Vec<&ThetaRow> = rows.iter().filter(|r| r.count != r.closed_form).collect();
    if mismatched.is_empty() {
        Ok(Status::Pass)
    } else {
        eprintln!("enumeration disagrees with the closed form: {mismatched:?}");
        Ok(Status::Fail)
    }
}
