//! Quantized inference: code lengths of dithered lattice codes and
//! multi-sample likelihood estimates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{decode_nll, encode, Noise};
use super::params::{Mode, ModelParams};
use crate::data::{Dataset, Split};
use crate::error::{check_dim, Error, Result};
use crate::lattice::{LatticeBasis, LatticeKind, ScaledProductLattice};
use crate::rng::stream;
use crate::verification::Moments;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DitherMode {
    /// Fresh uniform dither for every sample.
    Uniform,
    /// No dither: deterministic nearest-point quantization.
    Zero,
}

/// A dithered lattice code of one example.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantized {
    pub coeffs: Vec<i64>,
    /// Dither in base-lattice units.
    pub unit_dither: Vec<f64>,
    /// `−log p(code | dither)` in nats.
    pub code_len: f64,
}

/// The lattice the model quantizes to.
pub fn code_lattice(params: &ModelParams) -> Result<ScaledProductLattice> {
    match params.mode {
        Mode::DirectLaplaceZ => {
            let l = params
                .laplace
                .as_ref()
                .ok_or_else(|| Error::Contract("missing Laplace parameters".into()))?;
            let deltas = (0..params.t).map(|j| l.model(j).delta).collect();
            ScaledProductLattice::new(LatticeBasis::new(LatticeKind::Z), deltas)
        }
        Mode::GaussianProxy => {
            ScaledProductLattice::new(LatticeBasis::new(params.lattice), params.proxy_deltas()?)
        }
    }
}

fn scaled_dither(lattice: &ScaledProductLattice, unit: &[f64]) -> Vec<f64> {
    let m = lattice.block_dim();
    unit.iter()
        .enumerate()
        .map(|(j, v)| v * lattice.deltas()[j / m])
        .collect()
}

/// `−log p(coeffs | dither)` under the model's prior.
pub fn code_length(params: &ModelParams, coeffs: &[i64], unit_dither: &[f64]) -> Result<f64> {
    check_dim(params.t, coeffs.len())?;
    check_dim(params.t, unit_dither.len())?;
    match params.mode {
        Mode::DirectLaplaceZ => {
            let l = params.laplace.as_ref().expect("validated direct model");
            (0..params.t)
                .map(|j| {
                    let model = l.model(j);
                    model
                        .pmf_log(coeffs[j], model.delta * unit_dither[j])
                        .map(|v| -v)
                })
                .sum()
        }
        Mode::GaussianProxy => {
            let prior = params
                .prior
                .as_ref()
                .ok_or_else(|| Error::Contract("proxy model has no prior".into()))?;
            let m = params.block_dim();
            coeffs
                .chunks(m)
                .zip(unit_dither.chunks(m))
                .map(|(c, u)| prior.log_pmf(c, u).map(|v| -v))
                .sum()
        }
    }
}

/// Quantizes `e(x) + U` with the given unit dither.
pub fn quantize_example(params: &ModelParams, x: &[f64], unit_dither: &[f64]) -> Result<Quantized> {
    let lattice = code_lattice(params)?;
    let e = encode(params, x)?;
    check_dim(params.t, unit_dither.len())?;
    let u = scaled_dither(&lattice, unit_dither);
    let v: Vec<f64> = e.iter().zip(&u).map(|(a, b)| a + b).collect();
    let mut coeffs = vec![0i64; params.t];
    lattice.quantize_into(&v, &mut coeffs)?;
    let code_len = code_length(params, &coeffs, unit_dither)?;
    Ok(Quantized {
        coeffs,
        unit_dither: unit_dither.to_vec(),
        code_len,
    })
}

/// Decoder input `z − U` of a code.
pub fn decoder_input(
    params: &ModelParams,
    coeffs: &[i64],
    unit_dither: &[f64],
) -> Result<Vec<f64>> {
    let lattice = code_lattice(params)?;
    check_dim(params.t, coeffs.len())?;
    let mut z = vec![0.0; params.t];
    lattice.embed_into(coeffs, &mut z);
    let u = scaled_dither(&lattice, unit_dither);
    Ok(z.iter().zip(&u).map(|(a, b)| a - b).collect())
}

/// Multi-sample estimate for one example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleNll {
    /// `−log(k⁻¹ Σ exp(−costᵢ))`.
    pub nll: f64,
    /// Mean code length over the samples.
    pub rep_cost: f64,
    /// Mean reconstruction cost over the samples.
    pub rec_cost: f64,
}

pub fn draw_unit_dither<R: Rng + ?Sized>(
    params: &ModelParams,
    rng: &mut R,
    mode: DitherMode,
) -> Vec<f64> {
    match mode {
        DitherMode::Uniform => Noise::draw_dither_only(params, rng),
        DitherMode::Zero => vec![0.0; params.t],
    }
}

/// Quantized-inference likelihood estimate from `k` dithers.
pub fn infer_nll<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &[f64],
    k: usize,
    rng: &mut R,
    dither: DitherMode,
) -> Result<ExampleNll> {
    if k == 0 {
        return Err(Error::Contract(
            "need at least one importance sample".into(),
        ));
    }
    let mut costs = Vec::with_capacity(k);
    let (mut rep, mut rec) = (0.0, 0.0);
    for _ in 0..k {
        let unit = draw_unit_dither(params, rng, dither);
        let q = quantize_example(params, x, &unit)?;
        let y = decoder_input(params, &q.coeffs, &unit)?;
        let r = decode_nll(params, &y, x)?;
        rep += q.code_len;
        rec += r;
        costs.push(q.code_len + r);
    }
    let nll = if k == 1 {
        costs[0]
    } else {
        let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let mean: f64 = costs.iter().map(|c| (min - c).exp()).sum::<f64>() / k as f64;
        min - mean.ln()
    };
    Ok(ExampleNll {
        nll,
        rep_cost: rep / k as f64,
        rec_cost: rec / k as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean estimate in nats per example.
    pub nll: f64,
    pub nll_stderr: f64,
    pub nll_bits: f64,
    pub rep_cost: f64,
    pub rec_cost: f64,
    pub n_importance_samples: usize,
    pub n_examples: usize,
    pub split: Split,
    pub seed: u64,
    pub dither: DitherMode,
}

/// Averages [`infer_nll`] over a split; example `i` uses stream `i` of
/// `seed`.
pub fn evaluate(
    params: &ModelParams,
    data: &Dataset,
    split: Split,
    k: usize,
    seed: u64,
    dither: DitherMode,
) -> Result<EvalReport> {
    params.validate()?;
    check_dim(params.d, data.dim())?;
    let (mut nll, mut rep, mut rec) = (Moments::default(), 0.0, 0.0);
    let indices = data.indices(split);
    for &i in &indices {
        let x = data.example_f64(i);
        let r = infer_nll(params, &x, k, &mut stream(seed, i as u64), dither)?;
        nll.push(r.nll);
        rep += r.rep_cost;
        rec += r.rec_cost;
    }
    let n = indices.len();
    let mean = if n == 0 { 0.0 } else { nll.mean() };
    Ok(EvalReport {
        nll: mean,
        nll_stderr: if n < 2 { 0.0 } else { nll.stderr() },
        nll_bits: mean / std::f64::consts::LN_2,
        rep_cost: rep / n.max(1) as f64,
        rec_cost: rec / n.max(1) as f64,
        n_importance_samples: k,
        n_examples: n,
        split,
        seed,
        dither,
    })
}
