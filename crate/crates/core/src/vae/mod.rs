//! Linear Bernoulli autoencoder with lattice-quantized latents: the direct
//! Laplace+Z objective, the Gaussian-proxy objective with a theta prior,
//! and dithered quantized inference.

mod adam;
mod gradcheck;
mod infer;
mod model;
mod params;
mod train;

pub use adam::Adam;
pub use gradcheck::{finite_diff_check, finite_diff_check_corrupted, GradCheck, GRADCHECK_FLOOR};
pub use infer::{
    code_lattice, code_length, decoder_input, draw_unit_dither, evaluate, infer_nll,
    quantize_example, DitherMode, EvalReport, ExampleNll, Quantized,
};
pub use model::{
    decode_nll, encode, forward, forward_direct, forward_proxy, loss_direct, loss_proxy, LossParts,
    Noise, OUT_OF_SUPPORT_PENALTY,
};
pub use params::{
    default_threshold, Grads, LaplaceParams, Mode, ModelParams, ModelSpec, ProxyParams,
};
pub use train::{mean_loss, train, EpochRecord, TrainConfig, TrainOutcome};
