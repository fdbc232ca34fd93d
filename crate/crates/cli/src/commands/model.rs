use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use lattice_vae::data::{Dataset, Split};
use lattice_vae::lattice::LatticeKind;
use lattice_vae::rng::stream;
use lattice_vae::vae::{
    code_lattice, default_threshold, draw_unit_dither, evaluate, quantize_example, train as fit,
    DitherMode, EvalReport, ModelParams, ModelSpec, TrainConfig,
};
use lattice_vae::verification::Moments;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::codes::{write_codes, CodesSidecar};
use crate::config::{persist, resolve, usage};
use crate::data::{default_out, require_path, Binarize, DataSource};
use crate::report::{write_csv, write_json};
use crate::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    /// Laplace prior on the integer lattice, trained with dither noise.
    Direct,
    /// Gaussian proxy training, quantized to a lattice at inference.
    Proxy,
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "validation" => Ok(Split::Validation),
        "test" => Ok(Split::Test),
        "all" => Ok(Split::All),
        other => Err(format!(
            "unknown split `{other}` (expected train, validation, test or all)"
        )),
    }
}

fn parse_dither(s: &str) -> Result<DitherMode, String> {
    match s {
        "uniform" => Ok(DitherMode::Uniform),
        "zero" => Ok(DitherMode::Zero),
        other => Err(format!(
            "unknown dither `{other}` (expected uniform or zero)"
        )),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// IDX image file.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    binarize: Option<Binarize>,
    #[arg(long)]
    binarize_seed: Option<u64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    /// Base lattice of the proxy mode.
    #[arg(long)]
    lattice: Option<LatticeKind>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    shared_laplace: Option<bool>,
    /// Largest squared norm modeled by the theta prior.
    #[arg(long)]
    max_norm_sq: Option<u64>,
    /// Squared norm below which the prior uses its dither-dependent table.
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long)]
    init_alpha: Option<f64>,
    #[arg(long)]
    init_delta: Option<f64>,
    #[arg(long)]
    init_sigma_ug_sq: Option<f64>,
    #[arg(long)]
    init_sigma_us_sq: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    anneal_factor: Option<f64>,
    #[arg(long)]
    max_anneals: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TrainSettings {
    data: Option<PathBuf>,
    #[serde(default = "threshold_half")]
    binarize: Binarize,
    #[serde(default)]
    binarize_seed: u64,
    #[serde(default)]
    split_seed: u64,
    #[serde(default = "direct")]
    mode: ModeName,
    #[serde(default = "a2")]
    lattice: LatticeKind,
    #[serde(default = "eight")]
    latent_dim: usize,
    #[serde(default)]
    shared_laplace: bool,
    #[serde(default = "max_norm")]
    max_norm_sq: u64,
    threshold: Option<u64>,
    #[serde(default = "one")]
    init_alpha: f64,
    #[serde(default = "one")]
    init_delta: f64,
    #[serde(default = "tenth")]
    init_sigma_ug_sq: f64,
    #[serde(default = "one")]
    init_sigma_us_sq: f64,
    #[serde(default = "batch")]
    batch_size: usize,
    #[serde(default = "learning_rate")]
    learning_rate: f64,
    #[serde(default = "hundred")]
    max_epochs: usize,
    #[serde(default = "ten")]
    patience: usize,
    #[serde(default = "half")]
    anneal_factor: f64,
    #[serde(default = "three")]
    max_anneals: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "train_out")]
    out: PathBuf,
}

fn threshold_half() -> Binarize {
    Binarize::ThresholdHalf
}
fn direct() -> ModeName {
    ModeName::Direct
}
fn a2() -> LatticeKind {
    LatticeKind::A2
}
fn eight() -> usize {
    8
}
fn max_norm() -> u64 {
    1024
}
fn one() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}
fn batch() -> usize {
    32
}
fn learning_rate() -> f64 {
    3e-3
}
fn hundred() -> usize {
    100
}
fn ten() -> usize {
    10
}
fn half() -> f64 {
    0.5
}
fn three() -> usize {
    3
}
fn train_out() -> PathBuf {
    default_out("train")
}

impl TrainSettings {
    fn source(&self) -> DataSource {
        DataSource {
            binarize: self.binarize,
            binarize_seed: self.binarize_seed,
            split_seed: self.split_seed,
        }
    }

    fn config(&self, d: usize) -> TrainConfig {
        let t = self.latent_dim;
        let mut spec = match self.mode {
            ModeName::Direct => ModelSpec::direct(d, t),
            ModeName::Proxy => ModelSpec::proxy(d, t, self.lattice),
        };
        spec.shared_laplace = self.shared_laplace;
        if self.mode == ModeName::Direct {
            spec.init_alpha = self.init_alpha;
            spec.init_delta = self.init_delta;
        } else {
            spec.max_norm_sq = self.max_norm_sq;
            spec.threshold = self.threshold.unwrap_or(default_threshold(self.lattice));
            spec.init_sigma_ug_sq = self.init_sigma_ug_sq;
            spec.init_sigma_us_sq = self.init_sigma_us_sq;
        }
        let mut c = TrainConfig::new(spec);
        c.batch_size = self.batch_size;
        c.learning_rate = self.learning_rate;
        c.max_epochs = self.max_epochs;
        c.patience = self.patience;
        c.anneal_factor = self.anneal_factor;
        c.max_anneals = self.max_anneals;
        c.seed = self.seed;
        c
    }
}

fn train_pixel_means(data: &Dataset) -> Vec<f64> {
    let idx = data.indices(Split::Train);
    (0..data.dim())
        .map(|k| {
            idx.iter().map(|&i| data.example(i)[k] as f64).sum::<f64>() / idx.len().max(1) as f64
        })
        .collect()
}

pub fn train(file: Option<&Path>, args: TrainArgs) -> Result<Status> {
    let s: TrainSettings = resolve(file, "train", &args)?;
    let source = s.source();
    let data = source.load(s.data.as_deref())?;
    let config = s.config(data.dim());
    config.validate().map_err(|e| usage(e.to_string()))?;
    let mut params = ModelParams::init(&config.model, &mut stream(s.seed, 1 << 40))
        .map_err(|e| usage(e.to_string()))?;
    params.init_decoder_bias(&train_pixel_means(&data));
    persist(&s.out, "train", &s)?;
    let outcome = fit(params, &config, &data)?;
    write_csv(&s.out.join("history.csv"), &outcome.history)?;
    let ck = Checkpoint::new(outcome.params, config, source, data.provenance.clone());
    ck.save(&s.out.join("checkpoint.json"))?;
    let best = outcome
        .history
        .iter()
        .map(|r| r.val_loss)
        .fold(f64::INFINITY, f64::min);
    println!(
        "trained {} epochs{}; best validation loss {best:.4} nats; checkpoint in {}",
        outcome.history.len(),
        if outcome.stopped_early {
            " (stopped on plateau)"
        } else {
            ""
        },
        s.out.display()
    );
    Ok(Status::Pass)
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// IDX image file; read with the checkpoint's binarization and split.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Importance samples per example.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    #[arg(long, value_parser = parse_dither)]
    dither: Option<DitherMode>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EvalSettings {
    checkpoint: Option<PathBuf>,
    data: Option<PathBuf>,
    #[serde(default = "one_sample")]
    k: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "test_split")]
    split: Split,
    #[serde(default = "uniform")]
    dither: DitherMode,
    #[serde(default = "eval_out")]
    out: PathBuf,
}

fn one_sample() -> usize {
    1
}
fn test_split() -> Split {
    Split::Test
}
fn uniform() -> DitherMode {
    DitherMode::Uniform
}
fn eval_out() -> PathBuf {
    default_out("eval")
}

fn load_inputs(checkpoint: Option<&Path>, data: Option<&Path>) -> Result<(Checkpoint, Dataset)> {
    let ck = Checkpoint::load(require_path(checkpoint, "checkpoint")?)?;
    let data = ck.data.load(data)?;
    if data.dim() != ck.params.d {
        return Err(usage(format!(
            "dataset has {} pixels per image but the model expects {}",
            data.dim(),
            ck.params.d
        )));
    }
    Ok((ck, data))
}

pub fn eval(file: Option<&Path>, args: EvalArgs) -> Result<Status> {
    let s: EvalSettings = resolve(file, "eval", &args)?;
    if s.k == 0 {
        return Err(usage("k must be at least 1"));
    }
    let (ck, data) = load_inputs(s.checkpoint.as_deref(), s.data.as_deref())?;
    persist(&s.out, "eval", &s)?;
    let report: EvalReport = evaluate(&ck.params, &data, s.split, s.k, s.seed, s.dither)?;
    write_json(&s.out.join("eval.json"), &report)?;
    println!(
        "NLL {:.4} ± {:.4} nats ({:.4} bits) over {} examples, k={}; representation {:.4}, reconstruction {:.4}",
        report.nll,
        report.nll_stderr,
        report.nll_bits,
        report.n_examples,
        report.n_importance_samples,
        report.rep_cost,
        report.rec_cost
    );
    Ok(Status::Pass)
}

#[derive(Debug, Args, Serialize)]
pub struct QuantizeArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Dither seed; example `i` uses stream `i` of it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct QuantizeSettings {
    checkpoint: Option<PathBuf>,
    data: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "test_split")]
    split: Split,
    #[serde(default = "quantize_out")]
    out: PathBuf,
}

fn quantize_out() -> PathBuf {
    default_out("quantize")
}

pub const CODES_FORMAT: &str = "latvae-codes";

pub fn quantize(file: Option<&Path>, args: QuantizeArgs) -> Result<Status> {
    let s: QuantizeSettings = resolve(file, "quantize", &args)?;
    let (ck, data) = load_inputs(s.checkpoint.as_deref(), s.data.as_deref())?;
    persist(&s.out, "quantize", &s)?;
    let params = &ck.params;
    let lattice = code_lattice(params)?;
    let indices = data.indices(s.split);
    let (mut rows, mut lengths, mut stats) = (Vec::new(), Vec::new(), Moments::default());
    for &i in &indices {
        let unit = draw_unit_dither(params, &mut stream(s.seed, i as u64), DitherMode::Uniform);
        let q = quantize_example(params, &data.example_f64(i), &unit)
            .with_context(|| format!("quantizing example {i}"))?;
        stats.push(q.code_len);
        lengths.push(q.code_len);
        rows.push(q.coeffs);
    }
    write_codes(&s.out.join("codes.bin"), params.t, &rows)?;
    let n = indices.len();
    let sidecar = CodesSidecar {
        format: CODES_FORMAT.into(),
        version: 1,
        lattice: lattice.base().kind(),
        deltas: lattice.deltas().to_vec(),
        dither_seed: s.seed,
        split: s.split,
        indices,
        code_lengths: lengths,
        mean_code_length: if n == 0 { 0.0 } else { stats.mean() },
        code_length_stderr: if n < 2 { 0.0 } else { stats.stderr() },
    };
    write_json(&s.out.join("codes.json"), &sidecar)?;
    println!(
        "{n} codes of {} coefficients; mean code length {:.4} ± {:.4} nats",
        params.t, sidecar.mean_code_length, sidecar.code_length_stderr
    );
    Ok(Status::Pass)
}
