use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Subcommand};
use lattice_vae::lattice::{LatticeBasis, LatticeKind, ScaledProductLattice};
use lattice_vae::priors::LaplaceZModel;
use lattice_vae::rng::stream;
use lattice_vae::verification::{
    covering_ratio, crypto_lemma_negative_control, crypto_lemma_test, kl_to_gaussian_check,
    theorem1_check, EquivalenceReport, KlReport, TwoSampleReport,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{all_lattices, lattice_index};
use crate::config::{persist, resolve, usage};
use crate::data::default_out;
use crate::report::{write_csv, write_json};
use crate::Status;

#[derive(Debug, Subcommand)]
pub enum Suite {
    /// Two-sample permutation tests of K(y+U)−U against y−U.
    Crypto(CryptoArgs),
    /// Quantized code length against the continuous rate on a Laplace+Z grid.
    Theorem1(Theorem1Args),
    /// KL divergence of the dither from a moment-matched Gaussian.
    Kl(KlArgs),
    /// Cell-volume ratio of two lattices at equal second moment.
    Covering(CoveringArgs),
}

pub fn run(file: Option<&Path>, suite: Suite) -> Result<Status> {
    match suite {
        Suite::Crypto(a) => crypto(file, a),
        Suite::Theorem1(a) => theorem1(file, a),
        Suite::Kl(a) => kl(file, a),
        Suite::Covering(a) => covering(file, a),
    }
}

fn min_passes(total: usize, fraction: f64) -> usize {
    (fraction * total as f64 - 1e-9).ceil() as usize
}

fn check_fraction(f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(usage(format!(
            "min_pass_fraction must lie in [0, 1], got {f}"
        )))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CryptoArgs {
    /// Lattices to test (comma separated); all four by default.
    #[arg(long = "lattice", value_delimiter = ',')]
    lattices: Option<Vec<LatticeKind>>,
    /// Configurations (offsets y) per lattice.
    #[arg(long)]
    configs: Option<usize>,
    /// Samples per side of each test.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Offsets are drawn uniformly from [−y_range, y_range) per coordinate.
    #[arg(long)]
    y_range: Option<f64>,
    #[arg(long)]
    negative_control: Option<bool>,
    #[arg(long)]
    min_pass_fraction: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CryptoSettings {
    #[serde(default = "all_lattices")]
    lattices: Vec<LatticeKind>,
    #[serde(default = "twenty_five")]
    configs: usize,
    #[serde(default = "ten_thousand")]
    n: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "two")]
    y_range: f64,
    #[serde(default = "yes")]
    negative_control: bool,
    #[serde(default = "ninety_eight")]
    min_pass_fraction: f64,
    #[serde(default = "crypto_out")]
    out: PathBuf,
}

fn twenty_five() -> usize {
    25
}
fn ten_thousand() -> usize {
    10_000
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}
fn ninety_eight() -> f64 {
    0.98
}
fn crypto_out() -> PathBuf {
    default_out("verify-crypto")
}

#[derive(Debug, Serialize)]
struct CryptoRow {
    lattice: LatticeKind,
    seed: u64,
    statistic: f64,
    threshold: f64,
    pass: bool,
    control_statistic: Option<f64>,
    control_rejected: Option<bool>,
}

#[derive(Debug, Serialize)]
struct CryptoSummary {
    passed: usize,
    total: usize,
    required: usize,
    controls_rejected: usize,
    pass: bool,
    tests: Vec<TwoSampleReport>,
    controls: Vec<TwoSampleReport>,
}

fn crypto(file: Option<&Path>, args: CryptoArgs) -> Result<Status> {
    let s: CryptoSettings = resolve(file, "verify.crypto", &args)?;
    check_fraction(s.min_pass_fraction)?;
    if s.y_range.is_nan() || s.y_range <= 0.0 {
        return Err(usage("y_range must be positive"));
    }
    persist(&s.out, "verify.crypto", &s)?;
    let (mut rows, mut tests, mut controls) = (Vec::new(), Vec::new(), Vec::new());
    for &kind in &s.lattices {
        let lattice = ScaledProductLattice::unit(kind);
        for c in 0..s.configs as u64 {
            let seed = s.seed + 1000 * lattice_index(kind) + c;
            let mut rng = stream(seed, 99);
            let y: Vec<f64> = (0..kind.dim())
                .map(|_| rng.random_range(-s.y_range..s.y_range))
                .collect();
            let r = crypto_lemma_test(&lattice, &y, s.n, seed)?;
            let control = if s.negative_control {
                Some(crypto_lemma_negative_control(&lattice, &y, s.n, seed)?)
            } else {
                None
            };
            rows.push(CryptoRow {
                lattice: kind,
                seed,
                statistic: r.statistic,
                threshold: r.threshold,
                pass: r.pass,
                control_statistic: control.as_ref().map(|c| c.statistic),
                control_rejected: control.as_ref().map(|c| !c.pass),
            });
            tests.push(r);
            controls.extend(control);
        }
    }
    let total = tests.len();
    let passed = tests.iter().filter(|r| r.pass).count();
    let rejected = controls.iter().filter(|r| !r.pass).count();
    let required = min_passes(total, s.min_pass_fraction);
    let pass = passed >= required && rejected == controls.len();
    println!("crypto-lemma: {passed}/{total} pass (need {required}); negative control rejected {rejected}/{}", controls.len());
    for r in rows
        .iter()
        .filter(|r| !r.pass || r.control_rejected == Some(false))
    {
        eprintln!("failing case: {r:?}");
    }
    write_csv(&s.out.join("verify_crypto.csv"), &rows)?;
    write_json(
        &s.out.join("verify_crypto.json"),
        &CryptoSummary {
            passed,
            total,
            required,
            controls_rejected: rejected,
            pass,
            tests,
            controls,
        },
    )?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}

#[derive(Debug, Args, Serialize)]
pub struct Theorem1Args {
    /// Laplace decay rates (comma separated).
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Lattice scales (comma separated).
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// Encoder outputs (comma separated).
    #[arg(long, value_delimiter = ',')]
    e_x: Option<Vec<f64>>,
    /// Dithers per check.
    #[arg(long)]
    n: Option<usize>,
    /// Independent seeds per grid cell.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    min_pass_fraction: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Theorem1Settings {
    #[serde(default = "grid_alpha")]
    alpha: Vec<f64>,
    #[serde(default = "grid_alpha")]
    delta: Vec<f64>,
    #[serde(default = "grid_e_x")]
    e_x: Vec<f64>,
    #[serde(default = "hundred_thousand")]
    n: usize,
    #[serde(default = "twenty")]
    seeds: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "ninety_five")]
    min_pass_fraction: f64,
    #[serde(default = "theorem1_out")]
    out: PathBuf,
}

fn grid_alpha() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn grid_e_x() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
}
fn hundred_thousand() -> usize {
    100_000
}
fn twenty() -> u64 {
    20
}
fn ninety_five() -> f64 {
    0.95
}
fn theorem1_out() -> PathBuf {
    default_out("verify-theorem1")
}

#[derive(Debug, Serialize)]
struct CellRow {
    alpha: f64,
    delta: f64,
    e_x: f64,
    passed: usize,
    seeds: u64,
    required: usize,
    worst_z: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct Theorem1Summary {
    cells: Vec<CellRow>,
    pass: bool,
    reports: Vec<EquivalenceReport>,
}

fn theorem1(file: Option<&Path>, args: Theorem1Args) -> Result<Status> {
    let s: Theorem1Settings = resolve(file, "verify.theorem1", &args)?;
    check_fraction(s.min_pass_fraction)?;
    if s.seeds == 0 {
        return Err(usage("seeds must be positive"));
    }
    persist(&s.out, "verify.theorem1", &s)?;
    let (mut cells, mut reports) = (Vec::new(), Vec::new());
    let mut cell = 0u64;
    let required = min_passes(s.seeds as usize, s.min_pass_fraction);
    for &alpha in &s.alpha {
        for &delta in &s.delta {
            let model = LaplaceZModel::new(alpha, delta).map_err(|e| usage(e.to_string()))?;
            for &e_x in &s.e_x {
                let (mut passed, mut worst_z) = (0, 0.0f64);
                for k in 0..s.seeds {
                    let r = theorem1_check(&model, e_x, s.n, s.seed + 10_000 * cell + k)?;
                    passed += r.pass as usize;
                    worst_z = worst_z.max(r.abs_diff / r.combined_stderr.max(f64::MIN_POSITIVE));
                    reports.push(r);
                }
                let row = CellRow {
                    alpha,
                    delta,
                    e_x,
                    passed,
                    seeds: s.seeds,
                    required,
                    worst_z,
                    pass: passed >= required,
                };
                println!(
                    "α={alpha} Δ={delta} e_x={e_x}: {passed}/{} seeds within 3 stderr{}",
                    s.seeds,
                    if row.pass { "" } else { "  FAIL" }
                );
                if !row.pass {
                    eprintln!("failing case: {row:?}");
                }
                cells.push(row);
                cell += 1;
            }
        }
    }
    let pass = cells.iter().all(|c| c.pass);
    write_csv(&s.out.join("verify_theorem1.csv"), &cells)?;
    write_json(
        &s.out.join("verify_theorem1.json"),
        &Theorem1Summary {
            cells,
            pass,
            reports,
        },
    )?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}

#[derive(Debug, Args, Serialize)]
pub struct KlArgs {
    /// Lattices to check (comma separated); Z, A2 and E8 by default.
    #[arg(long = "lattice", value_delimiter = ',')]
    lattices: Option<Vec<LatticeKind>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct KlSettings {
    #[serde(default = "kl_lattices")]
    lattices: Vec<LatticeKind>,
    #[serde(default = "million")]
    n: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "kl_out")]
    out: PathBuf,
}

fn kl_lattices() -> Vec<LatticeKind> {
    vec![LatticeKind::Z, LatticeKind::A2, LatticeKind::E8]
}
fn million() -> usize {
    1_000_000
}
fn kl_out() -> PathBuf {
    default_out("verify-kl")
}

fn kl(file: Option<&Path>, args: KlArgs) -> Result<Status> {
    let s: KlSettings = resolve(file, "verify.kl", &args)?;
    persist(&s.out, "verify.kl", &s)?;
    let mut reports: Vec<KlReport> = Vec::new();
    for &kind in &s.lattices {
        let r = kl_to_gaussian_check(&LatticeBasis::new(kind), s.n, s.seed + lattice_index(kind))?;
        println!(
            "{:<3} KL per dim {:.5} ± {:.5}, closed form {:.5}{}",
            kind.name(),
            r.mc_kl,
            r.mc_stderr,
            r.analytic_kl,
            if r.pass { "" } else { "  FAIL" }
        );
        if !r.pass {
            eprintln!("failing case: {r:?}");
        }
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    write_csv(&s.out.join("verify_kl.csv"), &reports)?;
    write_json(&s.out.join("verify_kl.json"), &reports)?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}

#[derive(Debug, Args, Serialize)]
pub struct CoveringArgs {
    /// Lattice whose cell volume is the numerator.
    #[arg(long)]
    a: Option<LatticeKind>,
    #[arg(long)]
    b: Option<LatticeKind>,
    /// Expected ratio; the check passes within `tolerance` of it.
    #[arg(long)]
    expected: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CoveringSettings {
    #[serde(default = "z2")]
    a: LatticeKind,
    #[serde(default = "a2")]
    b: LatticeKind,
    #[serde(default = "expected_ratio")]
    expected: f64,
    #[serde(default = "ratio_tolerance")]
    tolerance: f64,
    #[serde(default = "covering_out")]
    out: PathBuf,
}

fn z2() -> LatticeKind {
    LatticeKind::Z2
}
fn a2() -> LatticeKind {
    LatticeKind::A2
}
fn expected_ratio() -> f64 {
    0.963
}
fn ratio_tolerance() -> f64 {
    0.002
}
fn covering_out() -> PathBuf {
    default_out("verify-covering")
}

#[derive(Debug, Serialize)]
struct CoveringReport {
    a: LatticeKind,
    b: LatticeKind,
    ratio: f64,
    expected: f64,
    tolerance: f64,
    pass: bool,
}

fn covering(file: Option<&Path>, args: CoveringArgs) -> Result<Status> {
    let s: CoveringSettings = resolve(file, "verify.covering", &args)?;
    persist(&s.out, "verify.covering", &s)?;
    let ratio = covering_ratio(&LatticeBasis::new(s.a), &LatticeBasis::new(s.b))
        .map_err(|e| usage(e.to_string()))?;
    let pass = (ratio - s.expected).abs() <= s.tolerance;
    println!(
        "cell volume {}/{} at equal second moment: {ratio:.4} (expected {} ± {}){}",
        s.a,
        s.b,
        s.expected,
        s.tolerance,
        if pass { "" } else { "  FAIL" }
    );
    let report = CoveringReport {
        a: s.a,
        b: s.b,
        ratio,
        expected: s.expected,
        tolerance: s.tolerance,
        pass,
    };
    write_json(&s.out.join("verify_covering.json"), &report)?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}
