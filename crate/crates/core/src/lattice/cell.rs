//! Voronoi zero-cell: uniform dither sampling and Monte-Carlo cell constants.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::basis::LatticeBasis;
use super::quantize::{nearest_base, ScaledProductLattice};
use crate::error::{Error, Result};

/// Minimum sample count accepted by [`cell_constants`].
pub const MIN_CELL_SAMPLES: usize = 10_000;

/// Draws a dither uniform over the unscaled zero cell: `W − K(W)` with
/// `W = V·B` and `V` uniform on `[0,1)^m`.
pub fn sample_base_dither_into<R: Rng + ?Sized>(
    basis: &LatticeBasis,
    rng: &mut R,
    out: &mut [f64],
) {
    let m = basis.dim();
    let mut v = [0.0; 8];
    for vi in v[..m].iter_mut() {
        *vi = rng.random::<f64>();
    }
    let mut w = [0.0; 8];
    for (k, &vk) in v[..m].iter().enumerate() {
        for (wj, b) in w[..m].iter_mut().zip(basis.row(k)) {
            *wj += vk * b;
        }
    }
    let mut coeffs = [0i64; 8];
    nearest_base(basis, &w[..m], &mut coeffs[..m]);
    let mut q = [0.0; 8];
    basis.embed_into(&coeffs[..m], &mut q[..m]);
    for j in 0..m {
        out[j] = w[j] - q[j];
    }
}

impl ScaledProductLattice {
    /// Dither in base-lattice units, one block after another. Multiplying
    /// block `i` by `Δᵢ` gives a dither uniform over this lattice's cell.
    pub fn sample_unit_dither_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let m = self.block_dim();
        for b in 0..self.blocks() {
            sample_base_dither_into(self.base(), rng, &mut out[b * m..(b + 1) * m]);
        }
    }

    /// A dither uniform over the zero cell `P₀` of this lattice.
    pub fn sample_dither<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.total_dim()];
        self.sample_dither_into(rng, &mut out);
        out
    }

    pub fn sample_dither_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.sample_unit_dither_into(rng, out);
        let m = self.block_dim();
        for (b, delta) in self.deltas().iter().enumerate() {
            out[b * m..(b + 1) * m].iter_mut().for_each(|u| *u *= delta);
        }
    }
}

/// Volume, second moment and normalized second moment of a lattice cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellConstants {
    pub volume: f64,
    /// Per-dimension second moment `σ²_Λ`.
    pub second_moment: f64,
    /// `σ²_Λ / V^{2/t}`.
    pub nsm: f64,
    pub n_samples: usize,
    /// Standard error of `second_moment`.
    pub stderr: f64,
    /// Standard error of `nsm`.
    pub nsm_stderr: f64,
}

/// Monte-Carlo estimate of the cell constants from `n_samples` dithers.
pub fn cell_constants<R: Rng + ?Sized>(
    lattice: &ScaledProductLattice,
    n_samples: usize,
    rng: &mut R,
) -> Result<CellConstants> {
    if n_samples < MIN_CELL_SAMPLES {
        return Err(Error::Contract(format!(
            "cell_constants needs at least {MIN_CELL_SAMPLES} samples, got {n_samples}"
        )));
    }
    let t = lattice.total_dim();
    let mut u = vec![0.0; t];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        lattice.sample_dither_into(rng, &mut u);
        let s = u.iter().map(|x| x * x).sum::<f64>() / t as f64;
        sum += s;
        sum_sq += s * s;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    let stderr = (var / n).sqrt();
    let scale = (lattice.log_volume() * 2.0 / t as f64).exp();
    Ok(CellConstants {
        volume: lattice.volume(),
        second_moment: mean,
        nsm: mean / scale,
        n_samples,
        stderr,
        nsm_stderr: stderr / scale,
    })
}

/// Scale `Δ` that makes the per-dimension second moment of a dither on
/// `Λ_Δ` equal to `sigma_ug_sq`, from the lattice's exact `G` and `V`.
pub fn matched_delta(basis: &LatticeBasis, sigma_ug_sq: f64) -> Result<f64> {
    matched_delta_from(basis.exact_nsm(), basis.volume(), basis.dim(), sigma_ug_sq)
}

/// `log Δ = ½ log σ² − ½ log G − (1/m) log V`.
pub fn matched_delta_from(nsm: f64, volume: f64, dim: usize, sigma_ug_sq: f64) -> Result<f64> {
    if !(sigma_ug_sq > 0.0 && sigma_ug_sq.is_finite()) {
        return Err(Error::Contract(format!(
            "variance must be positive, got {sigma_ug_sq}"
        )));
    }
    if !(nsm > 0.0 && volume > 0.0) {
        return Err(Error::Contract("cell constants must be positive".into()));
    }
    Ok((0.5 * sigma_ug_sq.ln() - 0.5 * nsm.ln() - volume.ln() / dim as f64).exp())
}
