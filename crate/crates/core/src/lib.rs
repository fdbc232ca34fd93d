//! Dithered lattice quantization for discrete latent representations.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`]: bases for `Z`, `Z²`, `A₂`, `E₈`, exact nearest-point
//!   quantizers, dither sampling, cell constants and theta coefficients.
//! * [`priors`]: Laplace+`Z` closed forms, the theta-series lattice prior,
//!   Gaussian KL terms and the Monte-Carlo `f_{S−U}` estimator.
//! * [`verification`]: Monte-Carlo checks of the dithered-quantization
//!   identities.
//! * [`vae`]: a linear Bernoulli VAE trained directly on the lattice or via
//!   a Gaussian proxy, with quantized multi-sample inference.
//! * [`data`]: IDX ingestion, binarization, synthetic data and splits.

pub mod data;
mod error;
pub mod lattice;
pub mod priors;
pub mod rng;
pub mod vae;
pub mod verification;

pub use error::{Error, Result};
