//! Two-sample check that `K(y+U) − U` and `y − U` are identically distributed.

use serde::{Deserialize, Serialize};

use super::energy::{energy_two_sample, ENERGY_BLOCK, PERMUTATIONS};
use super::MIN_TWO_SAMPLE;
use crate::error::{check_dim, Error, Result};
use crate::lattice::ScaledProductLattice;
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleReport {
    pub lattice: String,
    pub y: Vec<f64>,
    pub n_per_side: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
    pub permutations: usize,
    pub block: usize,
    /// Whether the second sample omitted the dither subtraction.
    pub negative_control: bool,
}

fn run(
    lattice: &ScaledProductLattice,
    y: &[f64],
    n: usize,
    seed: u64,
    subtract: bool,
) -> Result<TwoSampleReport> {
    if n < MIN_TWO_SAMPLE {
        return Err(Error::Contract(format!(
            "two-sample test needs at least {MIN_TWO_SAMPLE} samples per side, got {n}"
        )));
    }
    let t = lattice.total_dim();
    check_dim(t, y.len())?;
    let mut quantized = vec![0.0; n * t];
    let mut shifted = vec![0.0; n * t];
    let mut rng_a = stream(seed, 0);
    let mut rng_b = stream(seed, 1);
    let mut u = vec![0.0; t];
    let mut v = vec![0.0; t];
    let mut coeffs = vec![0i64; t];
    let mut q = vec![0.0; t];
    for i in 0..n {
        lattice.sample_dither_into(&mut rng_a, &mut u);
        for j in 0..t {
            v[j] = y[j] + u[j];
        }
        lattice.quantize_into(&v, &mut coeffs)?;
        lattice.embed_into(&coeffs, &mut q);
        let row = &mut quantized[i * t..(i + 1) * t];
        for j in 0..t {
            row[j] = if subtract { q[j] - u[j] } else { q[j] };
        }
        lattice.sample_dither_into(&mut rng_b, &mut u);
        for j in 0..t {
            shifted[i * t + j] = y[j] - u[j];
        }
    }
    let test = energy_two_sample(&quantized, &shifted, t, &mut stream(seed, 2))?;
    Ok(TwoSampleReport {
        lattice: lattice.base().kind().to_string(),
        y: y.to_vec(),
        n_per_side: n,
        statistic: test.statistic,
        threshold: test.threshold,
        pass: test.pass(),
        seed,
        permutations: PERMUTATIONS,
        block: ENERGY_BLOCK,
        negative_control: !subtract,
    })
}

/// Energy-distance permutation test at level 0.01 comparing `n` draws of
/// `K(y+U) − U` with `n` draws of `y − U` under independent dithers.
pub fn crypto_lemma_test(
    lattice: &ScaledProductLattice,
    y: &[f64],
    n: usize,
    seed: u64,
) -> Result<TwoSampleReport> {
    run(lattice, y, n, seed, true)
}

/// Same test with the dither left in the quantized output (`K(y+U)` against
/// `y − U`); a sound harness rejects this.
pub fn crypto_lemma_negative_control(
    lattice: &ScaledProductLattice,
    y: &[f64],
    n: usize,
    seed: u64,
) -> Result<TwoSampleReport> {
    run(lattice, y, n, seed, false)
}
