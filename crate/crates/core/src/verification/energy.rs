//! Permutation-calibrated energy-distance two-sample test.
//!
//! The statistic averages the V-statistic energy distance over disjoint
//! blocks of `ENERGY_BLOCK` samples per side, so the cost is linear in the
//! sample size. Permutations relabel samples within each block; that is a
//! subgroup of the full permutation group, so the test stays exact.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

pub const ENERGY_BLOCK: usize = 100;
pub const PERMUTATIONS: usize = 200;
const LEVEL: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTest {
    pub statistic: f64,
    pub threshold: f64,
    pub permuted: Vec<f64>,
}

impl EnergyTest {
    pub fn pass(&self) -> bool {
        self.statistic <= self.threshold
    }
}

struct Block {
    size: usize,
    dist: Vec<f64>,
    row_sums: Vec<f64>,
}

impl Block {
    fn new(x: &[f64], y: &[f64], dim: usize) -> Self {
        let pooled: Vec<&[f64]> = x.chunks(dim).chain(y.chunks(dim)).collect();
        let size = pooled.len();
        let mut dist = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = pooled[i]
                    .iter()
                    .zip(pooled[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i * size + j] = d;
                dist[j * size + i] = d;
            }
        }
        let row_sums = dist.chunks(size).map(|r| r.iter().sum()).collect();
        Block {
            size,
            dist,
            row_sums,
        }
    }

    /// Energy distance between the points with `mask = 1` and those with
    /// `mask = 0`; each group holds half of the block.
    fn energy(&self, mask: &[f64]) -> f64 {
        let n = (self.size / 2) as f64;
        // ordered-pair sums: X–X directly, X–Y from row sums, Y–Y by
        // complement; only rows in X are touched
        let (mut xx, mut to_y) = (0.0, 0.0);
        for (i, row) in self.dist.chunks(self.size).enumerate() {
            if mask[i] == 1.0 {
                let within = dot(row, mask);
                xx += within;
                to_y += self.row_sums[i] - within;
            }
        }
        let total: f64 = self.row_sums.iter().sum();
        let yy = total - xx - 2.0 * to_y;
        (2.0 * to_y - xx - yy) / (n * n)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Tests equality in distribution of two samples of `dim`-vectors stored
/// contiguously. Both samples must have the same size.
pub fn energy_two_sample<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    dim: usize,
    rng: &mut R,
) -> Result<EnergyTest> {
    if x.len() != y.len() || x.is_empty() || !x.len().is_multiple_of(dim) {
        return Err(Error::Contract(
            "energy test needs two equal, nonempty samples of whole vectors".into(),
        ));
    }
    let n = x.len() / dim;
    let mut statistic = 0.0;
    let mut permuted = vec![0.0; PERMUTATIONS];
    let mut start = 0;
    while start < n {
        let end = (start + ENERGY_BLOCK).min(n);
        let block = Block::new(&x[start * dim..end * dim], &y[start * dim..end * dim], dim);
        let weight = (end - start) as f64 / n as f64;
        let labels: Vec<f64> = (0..block.size)
            .map(|i| if i < block.size / 2 { 1.0 } else { 0.0 })
            .collect();
        statistic += weight * block.energy(&labels);
        let mut mask = labels.clone();
        for p in permuted.iter_mut() {
            mask.copy_from_slice(&labels);
            mask.shuffle(rng);
            *p += weight * block.energy(&mask);
        }
        start = end;
    }
    let mut all = permuted.clone();
    all.push(statistic);
    all.sort_by(f64::total_cmp);
    // reject when the observed value is among the top ⌊α(B+1)⌋ of B+1
    let k = ((1.0 - LEVEL) * all.len() as f64).ceil() as usize - 1;
    Ok(EnergyTest {
        statistic,
        threshold: all[k],
        permuted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn identical_distributions_pass_shifted_fail() {
        let mut rng = seeded(3);
        let x: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let z: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() + 0.3).collect();
        assert!(energy_two_sample(&x, &y, 1, &mut rng).unwrap().pass());
        assert!(!energy_two_sample(&x, &z, 1, &mut rng).unwrap().pass());
    }

    #[test]
    fn statistic_is_zero_for_identical_samples() {
        let x = vec![0.1, 0.5, 0.9, 0.2];
        let t = energy_two_sample(&x, &x, 2, &mut seeded(1)).unwrap();
        assert!(t.statistic.abs() < 1e-15);
    }

    #[test]
    fn threshold_is_high_order_statistic() {
        let mut rng = seeded(4);
        let x: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let t = energy_two_sample(&x, &y, 2, &mut rng).unwrap();
        let above = t.permuted.iter().filter(|&&p| p > t.threshold).count();
        assert!(above <= 2);
    }

    #[test]
    fn rejects_unequal_sizes() {
        assert!(energy_two_sample(&[0.0, 1.0], &[0.0], 1, &mut seeded(1)).is_err());
    }
}
