//! Monte-Carlo estimate of the density of `S − U`.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::lattice::ScaledProductLattice;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// `k⁻¹ Σ f_S(η − Vᵢ)` over `k` independent dithers `Vᵢ`.
pub fn estimate_f_s_minus_u<F, R>(
    density_s: F,
    lattice: &ScaledProductLattice,
    eta: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    Ok(estimate_f_s_minus_u_with_stderr(density_s, lattice, eta, k, rng)?.mean)
}

pub fn estimate_f_s_minus_u_with_stderr<F, R>(
    density_s: F,
    lattice: &ScaledProductLattice,
    eta: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if k == 0 {
        return Err(Error::Contract("need at least one dither sample".into()));
    }
    check_dim(lattice.total_dim(), eta.len())?;
    let mut v = vec![0.0; eta.len()];
    let mut shifted = vec![0.0; eta.len()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..k {
        lattice.sample_dither_into(rng, &mut v);
        for ((s, e), vi) in shifted.iter_mut().zip(eta).zip(&v) {
            *s = e - vi;
        }
        let f = density_s(&shifted);
        sum += f;
        sum_sq += f * f;
    }
    let n = k as f64;
    let mean = sum / n;
    let stderr = if k > 1 {
        ((sum_sq / n - mean * mean).max(0.0) / (n - 1.0)).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(Estimate { mean, stderr })
}
