use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{matched_delta, LatticeBasis, LatticeKind};
use crate::priors::{GaussianProxyParams, LaplaceZModel, ThetaPrior, ThetaPriorGrad};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Scaled integer lattice per coordinate with a Laplacian prior,
    /// trained on the closed-form representation cost.
    DirectLaplaceZ,
    /// Trained with Gaussian noise matched to the lattice dither; a theta
    /// prior supplies code lengths.
    GaussianProxy,
}

/// Learnable Laplace+Z parameters, one pair per latent coordinate or a
/// single shared pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceParams {
    pub log_alpha: Vec<f64>,
    pub log_delta: Vec<f64>,
}

impl LaplaceParams {
    pub fn shared(&self) -> bool {
        self.log_alpha.len() == 1
    }

    fn index(&self, j: usize) -> usize {
        if self.shared() {
            0
        } else {
            j
        }
    }

    pub fn model(&self, j: usize) -> LaplaceZModel {
        let k = self.index(j);
        LaplaceZModel {
            alpha: self.log_alpha[k].exp(),
            delta: self.log_delta[k].exp(),
        }
    }
}

/// Learnable proxy variances, one pair per lattice block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyParams {
    pub log_sigma_ug_sq: Vec<f64>,
    pub log_sigma_us_sq: Vec<f64>,
}

impl ProxyParams {
    pub fn block(&self, b: usize, m: usize) -> GaussianProxyParams {
        GaussianProxyParams {
            sigma_ug_sq: self.log_sigma_ug_sq[b].exp(),
            sigma_us_sq: self.log_sigma_us_sq[b].exp(),
            m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Input dimension.
    pub d: usize,
    /// Latent dimension.
    pub t: usize,
    pub mode: Mode,
    pub lattice: LatticeKind,
    /// `d × t`, row-major.
    pub enc_a: Vec<f64>,
    pub enc_b: Vec<f64>,
    /// `t × d`, row-major.
    pub dec_w: Vec<f64>,
    pub dec_c: Vec<f64>,
    pub laplace: Option<LaplaceParams>,
    pub proxy: Option<ProxyParams>,
    pub prior: Option<ThetaPrior>,
}

/// Gradient buffers laid out like [`ModelParams`]; unused parts are empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grads {
    pub enc_a: Vec<f64>,
    pub enc_b: Vec<f64>,
    pub dec_w: Vec<f64>,
    pub dec_c: Vec<f64>,
    pub log_alpha: Vec<f64>,
    pub log_delta: Vec<f64>,
    pub log_sigma_ug_sq: Vec<f64>,
    pub log_sigma_us_sq: Vec<f64>,
    pub prior: Option<ThetaPriorGrad>,
}

/// Shape and initialization of a fresh model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: usize,
    pub t: usize,
    pub mode: Mode,
    /// Base lattice of the proxy mode; the direct mode always uses Z.
    pub lattice: LatticeKind,
    /// One Laplace pair for all coordinates instead of one per coordinate.
    pub shared_laplace: bool,
    pub max_norm_sq: u64,
    pub threshold: u64,
    pub init_alpha: f64,
    pub init_delta: f64,
    pub init_sigma_ug_sq: f64,
    pub init_sigma_us_sq: f64,
}

impl ModelSpec {
    pub fn direct(d: usize, t: usize) -> Self {
        ModelSpec {
            d,
            t,
            mode: Mode::DirectLaplaceZ,
            lattice: LatticeKind::Z,
            shared_laplace: false,
            max_norm_sq: 0,
            threshold: 0,
            init_alpha: 1.0,
            init_delta: 1.0,
            init_sigma_ug_sq: 0.0,
            init_sigma_us_sq: 0.0,
        }
    }

    pub fn proxy(d: usize, t: usize, lattice: LatticeKind) -> Self {
        ModelSpec {
            d,
            t,
            mode: Mode::GaussianProxy,
            lattice,
            shared_laplace: false,
            max_norm_sq: 1024,
            threshold: default_threshold(lattice),
            init_alpha: 0.0,
            init_delta: 0.0,
            init_sigma_ug_sq: 0.1,
            init_sigma_us_sq: 1.0,
        }
    }
}

/// Threshold `t` giving a small table of a few points up to the first
/// shells: Z 3 points, Z² 9, A₂ 13, E₈ 241.
pub fn default_threshold(kind: LatticeKind) -> u64 {
    match kind {
        LatticeKind::Z => 2,
        LatticeKind::Z2 => 3,
        LatticeKind::A2 => 4,
        LatticeKind::E8 => 3,
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v.ln())
    } else {
        Err(Error::Contract(format!("{name} must be positive, got {v}")))
    }
}

impl ModelParams {
    /// Random weights (scaled normal), zero encoder bias, decoder bias at
    /// zero logits.
    pub fn init<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<Self> {
        let (d, t) = (spec.d, spec.t);
        if d == 0 || t == 0 {
            return Err(Error::Contract("model dimensions must be positive".into()));
        }
        let lattice = match spec.mode {
            Mode::DirectLaplaceZ => LatticeKind::Z,
            Mode::GaussianProxy => spec.lattice,
        };
        let m = lattice.dim();
        if t % m != 0 {
            return Err(Error::Contract(format!(
                "latent dimension {t} is not a multiple of the {lattice} block size {m}"
            )));
        }
        let enc = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid normal");
        let dec = Normal::new(0.0, 1.0 / (t as f64).sqrt()).expect("valid normal");
        let mut params = ModelParams {
            d,
            t,
            mode: spec.mode,
            lattice,
            enc_a: (0..d * t).map(|_| enc.sample(rng)).collect(),
            enc_b: vec![0.0; t],
            dec_w: (0..t * d).map(|_| dec.sample(rng)).collect(),
            dec_c: vec![0.0; d],
            laplace: None,
            proxy: None,
            prior: None,
        };
        match spec.mode {
            Mode::DirectLaplaceZ => {
                let k = if spec.shared_laplace { 1 } else { t };
                params.laplace = Some(LaplaceParams {
                    log_alpha: vec![positive("alpha", spec.init_alpha)?; k],
                    log_delta: vec![positive("delta", spec.init_delta)?; k],
                });
            }
            Mode::GaussianProxy => {
                let blocks = t / m;
                let ug = spec.init_sigma_ug_sq;
                let us = spec.init_sigma_us_sq;
                params.proxy = Some(ProxyParams {
                    log_sigma_ug_sq: vec![positive("sigma_ug_sq", ug)?; blocks],
                    log_sigma_us_sq: vec![positive("sigma_us_sq", us)?; blocks],
                });
                let mut prior = ThetaPrior::new(lattice, spec.max_norm_sq, spec.threshold)?;
                let delta = matched_delta(&LatticeBasis::new(lattice), ug)?;
                prior.init_gaussian((ug + us) / (delta * delta));
                params.prior = Some(prior);
            }
        }
        Ok(params)
    }

    /// Sets the decoder bias to the logits of per-pixel means.
    pub fn init_decoder_bias(&mut self, pixel_means: &[f64]) {
        for (c, &p) in self.dec_c.iter_mut().zip(pixel_means) {
            let p = p.clamp(1e-3, 1.0 - 1e-3);
            *c = (p / (1.0 - p)).ln();
        }
    }

    pub fn block_dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn blocks(&self) -> usize {
        self.t / self.block_dim()
    }

    /// Matched lattice scales of the proxy mode, one per block.
    pub fn proxy_deltas(&self) -> Result<Vec<f64>> {
        let proxy = self
            .proxy
            .as_ref()
            .ok_or_else(|| Error::Contract("model has no proxy parameters".into()))?;
        let basis = LatticeBasis::new(self.lattice);
        proxy
            .log_sigma_ug_sq
            .iter()
            .map(|l| matched_delta(&basis, l.exp()))
            .collect()
    }

    /// Checks shapes and the mode/parameter pairing.
    pub fn validate(&self) -> Result<()> {
        let shapes = [
            ("enc_a", self.enc_a.len(), self.d * self.t),
            ("enc_b", self.enc_b.len(), self.t),
            ("dec_w", self.dec_w.len(), self.t * self.d),
            ("dec_c", self.dec_c.len(), self.d),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::Contract(format!(
                    "{name} has {got} entries, expected {want}"
                )));
            }
        }
        if !self.t.is_multiple_of(self.block_dim()) {
            return Err(Error::Contract(
                "latent dimension is not a whole number of blocks".into(),
            ));
        }
        match (self.mode, &self.laplace, &self.proxy, &self.prior) {
            (Mode::DirectLaplaceZ, Some(l), None, None) => {
                let k = l.log_alpha.len();
                if self.lattice != LatticeKind::Z
                    || !(k == 1 || k == self.t)
                    || l.log_delta.len() != k
                {
                    return Err(Error::Contract("malformed Laplace parameters".into()));
                }
            }
            (Mode::GaussianProxy, None, Some(p), Some(prior)) => {
                let b = self.blocks();
                if p.log_sigma_ug_sq.len() != b
                    || p.log_sigma_us_sq.len() != b
                    || prior.kind != self.lattice
                {
                    return Err(Error::Contract("malformed proxy parameters".into()));
                }
            }
            _ => {
                return Err(Error::Contract(
                    "parameters do not match the model mode".into(),
                ))
            }
        }
        let finite = self
            .segments()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Contract("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn zero_grads(&self) -> Grads {
        let empty = Vec::new;
        Grads {
            enc_a: vec![0.0; self.enc_a.len()],
            enc_b: vec![0.0; self.enc_b.len()],
            dec_w: vec![0.0; self.dec_w.len()],
            dec_c: vec![0.0; self.dec_c.len()],
            log_alpha: self
                .laplace
                .as_ref()
                .map_or_else(empty, |l| vec![0.0; l.log_alpha.len()]),
            log_delta: self
                .laplace
                .as_ref()
                .map_or_else(empty, |l| vec![0.0; l.log_delta.len()]),
            log_sigma_ug_sq: self
                .proxy
                .as_ref()
                .map_or_else(empty, |p| vec![0.0; p.log_sigma_ug_sq.len()]),
            log_sigma_us_sq: self
                .proxy
                .as_ref()
                .map_or_else(empty, |p| vec![0.0; p.log_sigma_us_sq.len()]),
            prior: self.prior.as_ref().map(ThetaPrior::zero_grad),
        }
    }

    /// Learnable parameters as slices, in a fixed order shared with
    /// [`Grads::segments`].
    pub fn segments(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.enc_a, &self.enc_b, &self.dec_w, &self.dec_c];
        if let Some(l) = &self.laplace {
            out.extend([l.log_alpha.as_slice(), &l.log_delta]);
        }
        if let Some(p) = &self.proxy {
            out.extend([p.log_sigma_ug_sq.as_slice(), &p.log_sigma_us_sq]);
        }
        if let Some(p) = &self.prior {
            out.extend([
                p.psi.as_slice(),
                std::slice::from_ref(&p.flag_logit),
                &p.small_w,
                &p.small_b,
            ]);
        }
        out
    }

    pub fn segments_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            &mut self.enc_a,
            &mut self.enc_b,
            &mut self.dec_w,
            &mut self.dec_c,
        ];
        if let Some(l) = &mut self.laplace {
            out.extend([l.log_alpha.as_mut_slice(), &mut l.log_delta]);
        }
        if let Some(p) = &mut self.proxy {
            out.extend([p.log_sigma_ug_sq.as_mut_slice(), &mut p.log_sigma_us_sq]);
        }
        if let Some(p) = &mut self.prior {
            out.extend([
                p.psi.as_mut_slice(),
                std::slice::from_mut(&mut p.flag_logit),
                &mut p.small_w,
                &mut p.small_b,
            ]);
        }
        out
    }

    pub fn num_learnable(&self) -> usize {
        self.segments().iter().map(|s| s.len()).sum()
    }
}

impl Grads {
    pub fn segments(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.enc_a, &self.enc_b, &self.dec_w, &self.dec_c];
        if !self.log_alpha.is_empty() {
            out.extend([self.log_alpha.as_slice(), &self.log_delta]);
        }
        if !self.log_sigma_ug_sq.is_empty() {
            out.extend([self.log_sigma_ug_sq.as_slice(), &self.log_sigma_us_sq]);
        }
        if let Some(p) = &self.prior {
            out.extend([
                p.psi.as_slice(),
                std::slice::from_ref(&p.flag_logit),
                &p.small_w,
                &p.small_b,
            ]);
        }
        out
    }

    pub fn segments_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            &mut self.enc_a,
            &mut self.enc_b,
            &mut self.dec_w,
            &mut self.dec_c,
        ];
        if !self.log_alpha.is_empty() {
            out.extend([self.log_alpha.as_mut_slice(), &mut self.log_delta]);
        }
        if !self.log_sigma_ug_sq.is_empty() {
            out.extend([
                self.log_sigma_ug_sq.as_mut_slice(),
                &mut self.log_sigma_us_sq,
            ]);
        }
        if let Some(p) = &mut self.prior {
            out.extend([
                p.psi.as_mut_slice(),
                std::slice::from_mut(&mut p.flag_logit),
                &mut p.small_w,
                &mut p.small_b,
            ]);
        }
        out
    }

    pub fn flat(&self) -> Vec<f64> {
        self.segments().concat()
    }

    pub fn scale(&mut self, s: f64) {
        for seg in self.segments_mut() {
            seg.iter_mut().for_each(|g| *g *= s);
        }
    }
}
