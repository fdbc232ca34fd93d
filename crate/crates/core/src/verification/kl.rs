//! Divergence of the cell-uniform dither from a moment-matched Gaussian,
//! and the covering-efficiency ratio of two lattices.

use serde::{Deserialize, Serialize};

use super::stats::Moments;
use super::MIN_EQUIVALENCE;
use crate::error::{check_dim, Error, Result};
use crate::lattice::{LatticeBasis, ScaledProductLattice};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlReport {
    pub lattice: String,
    /// Per-dimension KL in nats.
    pub mc_kl: f64,
    pub mc_stderr: f64,
    /// `½ log(2πe·G)`.
    pub analytic_kl: f64,
    pub pass: bool,
    pub n: usize,
    pub seed: u64,
}

/// Monte-Carlo per-dimension `KL(U ‖ N(0, σ²I))` with `σ²` the cell's second
/// moment, against the closed form `½ log(2πe·G)`.
pub fn kl_to_gaussian_check(basis: &LatticeBasis, n: usize, seed: u64) -> Result<KlReport> {
    if n < MIN_EQUIVALENCE {
        return Err(Error::Contract(format!(
            "KL check needs at least {MIN_EQUIVALENCE} samples, got {n}"
        )));
    }
    let m = basis.dim() as f64;
    let sigma_sq = basis.exact_second_moment();
    let lattice = ScaledProductLattice::unit(basis.kind());
    let constant =
        (-basis.volume().ln() + 0.5 * m * (2.0 * std::f64::consts::PI * sigma_sq).ln()) / m;
    let mut rng = stream(seed, 0);
    let mut u = vec![0.0; basis.dim()];
    let mut acc = Moments::default();
    for _ in 0..n {
        lattice.sample_dither_into(&mut rng, &mut u);
        let r: f64 = u.iter().map(|x| x * x).sum();
        acc.push(constant + r / (2.0 * sigma_sq * m));
    }
    let analytic =
        0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * basis.exact_nsm()).ln();
    Ok(KlReport {
        lattice: basis.kind().to_string(),
        mc_kl: acc.mean(),
        mc_stderr: acc.stderr(),
        analytic_kl: analytic,
        pass: (acc.mean() - analytic).abs() <= 3.0 * acc.stderr(),
        n,
        seed,
    })
}

/// Ratio of cell volumes `V_a / V_b` when both lattices are scaled to the
/// same second moment; equals `G(b) / G(a)`. Below one means `a` needs
/// fewer points than `b` to cover the same region.
pub fn covering_ratio(lat_a: &LatticeBasis, lat_b: &LatticeBasis) -> Result<f64> {
    check_dim(lat_a.dim(), lat_b.dim())?;
    Ok(lat_b.exact_nsm() / lat_a.exact_nsm())
}
