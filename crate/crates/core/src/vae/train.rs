//! Minibatch training with validation-driven learning-rate halving.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::model::{forward, LossParts};
use super::params::{ModelParams, ModelSpec};
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelSpec,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before the rate is cut.
    pub patience: usize,
    /// Factor applied to the learning rate on a plateau.
    pub anneal_factor: f64,
    /// Training stops once the rate has been cut this many times and
    /// validation stalls again.
    pub max_anneals: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(model: ModelSpec) -> Self {
        TrainConfig {
            model,
            batch_size: 32,
            learning_rate: 3e-3,
            max_epochs: 100,
            patience: 10,
            anneal_factor: 0.5,
            max_anneals: 3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Contract(
                "batch size, epochs and patience must be positive".into(),
            ));
        }
        if !(self.anneal_factor > 0.0 && self.anneal_factor < 1.0) {
            return Err(Error::Contract(format!(
                "anneal factor must lie in (0, 1), got {}",
                self.anneal_factor
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Contract("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean reconstruction plus representation cost over the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
    /// Mean prior code length (proxy mode; zero otherwise).
    pub code_len: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation loss.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

const VALIDATION_STREAM: u64 = 0x5641_4c49_4441_5445;

/// Mean loss parts over `indices` with per-example noise from `seed`.
pub fn mean_loss(
    params: &ModelParams,
    data: &Dataset,
    indices: &[usize],
    seed: u64,
) -> Result<LossParts> {
    let mut acc = LossParts::default();
    for &i in indices {
        let x = data.example_f64(i);
        let p = forward(params, &x, &mut stream(seed, i as u64), None)?;
        acc.rec += p.rec;
        acc.rep += p.rep;
        acc.code_len += p.code_len;
    }
    let n = indices.len().max(1) as f64;
    acc.rec /= n;
    acc.rep /= n;
    acc.code_len /= n;
    Ok(acc)
}

/// Trains `params` on the training split of `data`; the validation split
/// drives the schedule. Deterministic given `config.seed`.
pub fn train(
    mut params: ModelParams,
    config: &TrainConfig,
    data: &Dataset,
) -> Result<TrainOutcome> {
    config.validate()?;
    params.validate()?;
    if data.dim() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            got: data.dim(),
        });
    }
    let train_idx = data.indices(Split::Train);
    if train_idx.is_empty() {
        return Err(Error::Contract("training split is empty".into()));
    }
    let mut val_idx = data.indices(Split::Validation);
    if val_idx.is_empty() {
        val_idx = train_idx.clone();
    }
    let val_seed = config.seed ^ VALIDATION_STREAM;
    let mut adam = Adam::new(params.num_learnable());
    let mut lr = config.learning_rate;
    let mut best = mean_loss(&params, data, &val_idx, val_seed)?.elbo_loss();
    let mut best_params = params.clone();
    let mut stagnant = 0;
    let mut anneals = 0;
    let mut history = Vec::new();
    let mut stopped_early = false;
    for epoch in 0..config.max_epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut stream(config.seed, (1 << 48) | epoch as u64));
        let epoch_seed = config.seed.wrapping_add(1 + epoch as u64);
        let (mut loss_sum, mut code_sum) = (0.0, 0.0);
        for batch in order.chunks(config.batch_size) {
            let mut grads = params.zero_grads();
            for &i in batch {
                let x = data.example_f64(i);
                let parts = forward(
                    &params,
                    &x,
                    &mut stream(epoch_seed, i as u64),
                    Some(&mut grads),
                )?;
                if !parts.total().is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        detail: format!("non-finite loss on example {i}"),
                    });
                }
                loss_sum += parts.elbo_loss();
                code_sum += parts.code_len;
            }
            grads.scale(1.0 / batch.len() as f64);
            if grads
                .segments()
                .iter()
                .any(|s| s.iter().any(|g| !g.is_finite()))
            {
                return Err(Error::Divergence {
                    epoch,
                    detail: "non-finite gradient".into(),
                });
            }
            adam.step(&mut params, &grads, lr);
        }
        let val = mean_loss(&params, data, &val_idx, val_seed)?.elbo_loss();
        if !val.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: "non-finite validation loss".into(),
            });
        }
        let n = order.len() as f64;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n,
            val_loss: val,
            lr,
            code_len: code_sum / n,
        });
        if val < best {
            best = val;
            best_params = params.clone();
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= config.patience {
                if anneals == config.max_anneals {
                    stopped_early = true;
                    break;
                }
                lr *= config.anneal_factor;
                anneals += 1;
                stagnant = 0;
            }
        }
    }
    Ok(TrainOutcome {
        params: best_params,
        history,
        stopped_early,
    })
}
