//! Central-difference check of the hand-written gradients.

use serde::{Deserialize, Serialize};

use super::model::{forward_direct, forward_proxy, Noise};
use super::params::{Mode, ModelParams};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Gradients smaller than this are compared in absolute terms; it sits
/// well above the round-off of a central difference on losses of tens of
/// nats.
pub const GRADCHECK_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub n_params: usize,
    pub eps: f64,
}

fn loss_with(
    params: &ModelParams,
    x: &[f64],
    noise: &Noise,
    code: &[i64],
    grads: Option<&mut super::params::Grads>,
) -> Result<f64> {
    Ok(match params.mode {
        Mode::DirectLaplaceZ => forward_direct(params, x, noise, grads)?.total(),
        Mode::GaussianProxy => forward_proxy(params, x, noise, Some(code), grads)?.total(),
    })
}

/// Maximum relative error between analytic and central-difference
/// gradients, with the noise frozen from `rng_seed` and (in proxy mode)
/// the quantized code held at its value for `params`.
pub fn finite_diff_check(
    params: &ModelParams,
    x: &[f64],
    eps: f64,
    rng_seed: u64,
) -> Result<GradCheck> {
    finite_diff_check_corrupted(params, x, eps, rng_seed, false)
}

/// As [`finite_diff_check`]; with `corrupt` the largest analytic gradient
/// entry is negated first, which the check must flag.
pub fn finite_diff_check_corrupted(
    params: &ModelParams,
    x: &[f64],
    eps: f64,
    rng_seed: u64,
    corrupt: bool,
) -> Result<GradCheck> {
    if !(1e-6..=1e-4).contains(&eps) {
        return Err(Error::Contract(format!(
            "eps must lie in [1e-6, 1e-4], got {eps}"
        )));
    }
    params.validate()?;
    let noise = Noise::draw(params, &mut stream(rng_seed, 0));
    let code = match params.mode {
        Mode::GaussianProxy => forward_proxy(params, x, &noise, None, None)?.code,
        Mode::DirectLaplaceZ => Vec::new(),
    };
    let mut grads = params.zero_grads();
    loss_with(params, x, &noise, &code, Some(&mut grads))?;
    let mut analytic = grads.flat();
    if corrupt {
        let worst = (0..analytic.len())
            .max_by(|&a, &b| analytic[a].abs().total_cmp(&analytic[b].abs()))
            .unwrap_or(0);
        analytic[worst] = -analytic[worst];
    }
    let mut probe = params.clone();
    let mut max_rel = 0.0;
    let mut worst_index = 0;
    let mut k = 0;
    let n_segments = probe.segments().len();
    for s in 0..n_segments {
        let len = probe.segments()[s].len();
        for i in 0..len {
            let orig = probe.segments()[s][i];
            probe.segments_mut()[s][i] = orig + eps;
            let up = loss_with(&probe, x, &noise, &code, None)?;
            probe.segments_mut()[s][i] = orig - eps;
            let down = loss_with(&probe, x, &noise, &code, None)?;
            probe.segments_mut()[s][i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRADCHECK_FLOOR);
            if rel > max_rel {
                max_rel = rel;
                worst_index = k;
            }
            k += 1;
        }
    }
    Ok(GradCheck {
        max_rel_error: max_rel,
        worst_index,
        n_params: k,
        eps,
    })
}
