//! Forward and backward passes of the two training losses.

use rand::Rng;
use rand_distr::StandardNormal;

use super::params::{Grads, Mode, ModelParams};
use crate::error::{check_dim, Error, Result};
use crate::lattice::{sample_base_dither_into, LatticeBasis, ScaledProductLattice};
use crate::priors::gaussian_kl_sample;

/// Code length charged on top of the largest modeled shell when a
/// training code falls outside the prior's support.
pub const OUT_OF_SUPPORT_PENALTY: f64 = 20.0;

/// `x·A + b`.
pub fn encode(params: &ModelParams, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(params.d, x.len())?;
    let t = params.t;
    let mut e = params.enc_b.clone();
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            let row = &params.enc_a[i * t..(i + 1) * t];
            for (ej, a) in e.iter_mut().zip(row) {
                *ej += xi * a;
            }
        }
    }
    Ok(e)
}

fn logits(params: &ModelParams, latent: &[f64]) -> Vec<f64> {
    let d = params.d;
    let mut l = params.dec_c.clone();
    for (j, &zj) in latent.iter().enumerate() {
        let row = &params.dec_w[j * d..(j + 1) * d];
        for (lk, w) in l.iter_mut().zip(row) {
            *lk += zj * w;
        }
    }
    l
}

fn softplus(l: f64) -> f64 {
    l.max(0.0) + (-l.abs()).exp().ln_1p()
}

fn sigmoid(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli negative log-likelihood of binary `x` under logits
/// `latent·W + c`, summed over pixels.
pub fn decode_nll(params: &ModelParams, latent: &[f64], x: &[f64]) -> Result<f64> {
    check_dim(params.t, latent.len())?;
    check_dim(params.d, x.len())?;
    if x.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Contract("pixels must be 0 or 1".into()));
    }
    Ok(logits(params, latent)
        .iter()
        .zip(x)
        .map(|(&l, &xk)| softplus(l) - xk * l)
        .sum())
}

/// Decoder NLL with its backward pass: accumulates into `grads` and
/// returns `∂NLL/∂latent`.
fn decode_backward(
    params: &ModelParams,
    latent: &[f64],
    x: &[f64],
    grads: Option<&mut Grads>,
) -> (f64, Vec<f64>) {
    let d = params.d;
    let l = logits(params, latent);
    let nll = l
        .iter()
        .zip(x)
        .map(|(&lk, &xk)| softplus(lk) - xk * lk)
        .sum();
    let Some(grads) = grads else {
        return (nll, Vec::new());
    };
    let dl: Vec<f64> = l.iter().zip(x).map(|(&lk, &xk)| sigmoid(lk) - xk).collect();
    let mut dlatent = vec![0.0; params.t];
    for (j, &zj) in latent.iter().enumerate() {
        let row = &params.dec_w[j * d..(j + 1) * d];
        let grow = &mut grads.dec_w[j * d..(j + 1) * d];
        let mut acc = 0.0;
        for k in 0..d {
            grow[k] += zj * dl[k];
            acc += row[k] * dl[k];
        }
        dlatent[j] = acc;
    }
    for (g, v) in grads.dec_c.iter_mut().zip(&dl) {
        *g += v;
    }
    (nll, dlatent)
}

fn encode_backward(params: &ModelParams, x: &[f64], de: &[f64], grads: &mut Grads) {
    let t = params.t;
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            for (g, v) in grads.enc_a[i * t..(i + 1) * t].iter_mut().zip(de) {
                *g += xi * v;
            }
        }
    }
    for (g, v) in grads.enc_b.iter_mut().zip(de) {
        *g += v;
    }
}

/// Random inputs of one loss evaluation. Holding them fixed makes the loss
/// a deterministic function of the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Noise {
    /// Lattice dither in base-lattice units (per coordinate for the direct
    /// mode, per block for the proxy mode).
    pub unit_dither: Vec<f64>,
    /// Standard normal draws for the proxy's Gaussian noise.
    pub gauss: Vec<f64>,
}

impl Noise {
    pub fn draw<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Self {
        let t = params.t;
        let gauss = match params.mode {
            Mode::GaussianProxy => (0..t).map(|_| rng.sample(StandardNormal)).collect(),
            Mode::DirectLaplaceZ => Vec::new(),
        };
        let unit_dither = Self::draw_dither_only(params, rng);
        Noise { unit_dither, gauss }
    }

    /// A lattice dither in base-lattice units, block by block.
    pub fn draw_dither_only<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Vec<f64> {
        let basis = LatticeBasis::new(params.lattice);
        let m = basis.dim();
        let mut unit_dither = vec![0.0; params.t];
        for b in 0..params.t / m {
            sample_base_dither_into(&basis, rng, &mut unit_dither[b * m..(b + 1) * m]);
        }
        unit_dither
    }
}

/// Loss terms of one example, in nats.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossParts {
    /// Decoder negative log-likelihood.
    pub rec: f64,
    /// Continuous representation cost (direct) or Gaussian KL (proxy).
    pub rep: f64,
    /// Code length of the quantized latent under the theta prior (proxy).
    pub code_len: f64,
    /// Quantized block coefficients (proxy).
    pub code: Vec<i64>,
}

impl LossParts {
    /// The variational objective: reconstruction plus representation.
    pub fn elbo_loss(&self) -> f64 {
        self.rec + self.rep
    }

    /// Everything that is minimized, including the prior's code length.
    pub fn total(&self) -> f64 {
        self.rec + self.rep + self.code_len
    }
}

/// Direct Laplace+Z loss for fixed noise; accumulates gradients if asked.
pub fn forward_direct(
    params: &ModelParams,
    x: &[f64],
    noise: &Noise,
    mut grads: Option<&mut Grads>,
) -> Result<LossParts> {
    let laplace = params
        .laplace
        .as_ref()
        .ok_or_else(|| Error::Contract("direct loss needs Laplace parameters".into()))?;
    let e = encode(params, x)?;
    let t = params.t;
    let mut y = vec![0.0; t];
    let mut rep = 0.0;
    let mut rep_grads = Vec::with_capacity(t);
    for j in 0..t {
        let model = laplace.model(j);
        let u = model.delta * noise.unit_dither[j];
        y[j] = e[j] - u;
        let g = model.rep_cost_grad(y[j]);
        rep += g.value;
        rep_grads.push((model, g));
    }
    let (rec, dy) = decode_backward(params, &y, x, grads.as_deref_mut());
    if let Some(grads) = grads {
        let mut de = vec![0.0; t];
        for j in 0..t {
            let (model, g) = rep_grads[j];
            // η = e − Δv feeds both the decoder and the rep cost
            let d_eta = dy[j] + g.d_eta;
            de[j] = d_eta;
            let d_delta = g.d_delta - d_eta * noise.unit_dither[j];
            let k = if laplace.shared() { 0 } else { j };
            grads.log_alpha[k] += g.d_alpha * model.alpha;
            grads.log_delta[k] += d_delta * model.delta;
        }
        encode_backward(params, x, &de, grads);
    }
    Ok(LossParts {
        rec,
        rep,
        code_len: 0.0,
        code: Vec::new(),
    })
}

/// Gaussian-proxy loss for fixed noise. The code length only reaches the
/// prior parameters; `frozen_code` replaces the quantized point.
pub fn forward_proxy(
    params: &ModelParams,
    x: &[f64],
    noise: &Noise,
    frozen_code: Option<&[i64]>,
    mut grads: Option<&mut Grads>,
) -> Result<LossParts> {
    let (proxy, prior) = match (&params.proxy, &params.prior) {
        (Some(p), Some(q)) => (p, q),
        _ => {
            return Err(Error::Contract(
                "proxy loss needs proxy and prior parameters".into(),
            ))
        }
    };
    let e = encode(params, x)?;
    let t = params.t;
    let m = params.block_dim();
    let blocks = params.blocks();
    let mut y = vec![0.0; t];
    for b in 0..blocks {
        let sigma = proxy.log_sigma_ug_sq[b].exp().sqrt();
        for j in b * m..(b + 1) * m {
            y[j] = e[j] - sigma * noise.gauss[j];
        }
    }
    let (rec, dy) = decode_backward(params, &y, x, grads.as_deref_mut());
    let mut kl = 0.0;
    for b in 0..blocks {
        let span = b * m..(b + 1) * m;
        let p = proxy.block(b, m);
        let sigma = p.sigma_ug_sq.sqrt();
        let u: Vec<f64> = noise.gauss[span.clone()]
            .iter()
            .map(|z| sigma * z)
            .collect();
        kl += gaussian_kl_sample(&e[span.clone()], &u, &p)?;
    }

    // code length of the quantized latent, detached from encoder and proxy
    let deltas = params.proxy_deltas()?;
    let lattice = ScaledProductLattice::new(LatticeBasis::new(params.lattice), deltas.clone())?;
    let code = match frozen_code {
        Some(c) => {
            check_dim(t, c.len())?;
            c.to_vec()
        }
        None => {
            let mut v = vec![0.0; t];
            for (b, delta) in deltas.iter().enumerate() {
                for j in b * m..(b + 1) * m {
                    v[j] = e[j] + delta * noise.unit_dither[j];
                }
            }
            let mut c = vec![0i64; t];
            lattice.quantize_into(&v, &mut c)?;
            c
        }
    };
    let mut code_len = 0.0;
    let mut scratch = prior.zero_grad();
    for b in 0..blocks {
        let span = b * m..(b + 1) * m;
        let sink = match grads.as_deref_mut() {
            Some(g) => g.prior.as_mut().expect("proxy grads carry prior grads"),
            None => &mut scratch,
        };
        code_len += prior.code_length_grad(
            &code[span.clone()],
            &noise.unit_dither[span],
            OUT_OF_SUPPORT_PENALTY,
            1.0,
            sink,
        );
    }

    if let Some(grads) = grads {
        let mut de = dy.clone();
        for b in 0..blocks {
            let span = b * m..(b + 1) * m;
            let p = proxy.block(b, m);
            let s = p.total_var();
            let sigma = p.sigma_ug_sq.sqrt();
            let mut diff_sq = 0.0;
            let mut d_sigma = 0.0;
            for j in span {
                let diff = y[j];
                diff_sq += diff * diff;
                de[j] += diff / s;
                // u = σε enters the decoder input and the KL residual
                d_sigma -= (dy[j] + diff / s) * noise.gauss[j];
            }
            let mf = m as f64;
            let d_s = -0.5 * diff_sq / (s * s) + 0.5 * mf / s;
            let d_ug_explicit = -0.5 * mf / p.sigma_ug_sq;
            grads.log_sigma_ug_sq[b] +=
                d_sigma * sigma / 2.0 + (d_s + d_ug_explicit) * p.sigma_ug_sq;
            grads.log_sigma_us_sq[b] += d_s * p.sigma_us_sq;
        }
        encode_backward(params, x, &de, grads);
    }
    Ok(LossParts {
        rec,
        rep: kl,
        code_len,
        code,
    })
}

/// Draws noise and evaluates the loss of the model's mode.
pub fn forward<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &[f64],
    rng: &mut R,
    grads: Option<&mut Grads>,
) -> Result<LossParts> {
    let noise = Noise::draw(params, rng);
    match params.mode {
        Mode::DirectLaplaceZ => forward_direct(params, x, &noise, grads),
        Mode::GaussianProxy => forward_proxy(params, x, &noise, None, grads),
    }
}

/// Direct-mode loss and gradients for one example.
pub fn loss_direct<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &[f64],
    rng: &mut R,
) -> Result<(f64, Grads)> {
    if params.mode != Mode::DirectLaplaceZ {
        return Err(Error::Contract(
            "loss_direct needs a direct-mode model".into(),
        ));
    }
    let mut grads = params.zero_grads();
    let parts = forward(params, x, rng, Some(&mut grads))?;
    Ok((parts.elbo_loss(), grads))
}

/// Proxy-mode loss (reconstruction plus KL), gradients including those of
/// the code length, and the code length itself.
pub fn loss_proxy<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &[f64],
    rng: &mut R,
) -> Result<(f64, Grads, f64)> {
    if params.mode != Mode::GaussianProxy {
        return Err(Error::Contract(
            "loss_proxy needs a proxy-mode model".into(),
        ));
    }
    let mut grads = params.zero_grads();
    let parts = forward(params, x, rng, Some(&mut grads))?;
    Ok((parts.elbo_loss(), grads, parts.code_len))
}
