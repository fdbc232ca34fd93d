//! Numerical checks of the dithered-quantization identities.

mod crypto;
mod energy;
mod kl;
mod stats;
mod theorem1;

pub use crypto::{crypto_lemma_negative_control, crypto_lemma_test, TwoSampleReport};
pub use energy::{energy_two_sample, EnergyTest, ENERGY_BLOCK, PERMUTATIONS};
pub use kl::{covering_ratio, kl_to_gaussian_check, KlReport};
pub use stats::Moments;
pub use theorem1::{theorem1_check, theorem1_check_z2_gaussian, EquivalenceReport};

/// Smallest sample count accepted by the Monte-Carlo checks.
pub const MIN_TWO_SAMPLE: usize = 10_000;
pub const MIN_EQUIVALENCE: usize = 100_000;
