//! Equality of the expected quantized code length and the expected
//! continuous representation cost.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::stats::Moments;
use super::MIN_EQUIVALENCE;
use crate::error::{Error, Result};
use crate::lattice::{LatticeBasis, LatticeKind, ScaledProductLattice};
use crate::priors::{estimate_f_s_minus_u, LaplaceZModel};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub case: String,
    pub lhs_mc: f64,
    pub lhs_stderr: f64,
    pub rhs_mc: f64,
    pub rhs_stderr: f64,
    pub abs_diff: f64,
    /// Standard error of the mean paired difference; both sides share
    /// each dither.
    pub combined_stderr: f64,
    pub pass: bool,
    pub n: usize,
    pub seed: u64,
    pub common_random_numbers: bool,
}

fn report(case: String, lhs: Moments, rhs: Moments, diff: Moments, seed: u64) -> EquivalenceReport {
    let abs_diff = diff.mean().abs();
    let combined = diff.stderr();
    EquivalenceReport {
        case,
        lhs_mc: lhs.mean(),
        lhs_stderr: lhs.stderr(),
        rhs_mc: rhs.mean(),
        rhs_stderr: rhs.stderr(),
        abs_diff,
        combined_stderr: combined,
        pass: abs_diff <= 3.0 * combined,
        n: diff.count(),
        seed,
        common_random_numbers: true,
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_EQUIVALENCE {
        return Err(Error::Contract(format!(
            "equivalence check needs at least {MIN_EQUIVALENCE} dithers, got {n}"
        )));
    }
    Ok(())
}

/// Laplacian `S` on `ΔZ`: the mean of `−log p_{Z|U}(K(e_x+U) | U)` against
/// the mean of `log f_U(U)/f_{S−U}(e_x−U)`, both over the same dithers.
pub fn theorem1_check(
    model: &LaplaceZModel,
    e_x: f64,
    n: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    check_n(n)?;
    let lattice = ScaledProductLattice::uniform(LatticeBasis::new(LatticeKind::Z), 1, model.delta)?;
    let mut rng = stream(seed, 0);
    let (mut lhs, mut rhs, mut diff) = (Moments::default(), Moments::default(), Moments::default());
    let mut u = [0.0];
    let mut z = [0i64];
    for _ in 0..n {
        lattice.sample_dither_into(&mut rng, &mut u);
        lattice.quantize_into(&[e_x + u[0]], &mut z)?;
        let l = -model.pmf_log(z[0], u[0])?;
        let r = model.rep_cost(e_x - u[0]);
        lhs.push(l);
        rhs.push(r);
        diff.push(l - r);
    }
    let case = format!(
        "laplace alpha={} delta={} e_x={}",
        model.alpha, model.delta, e_x
    );
    Ok(report(case, lhs, rhs, diff, seed))
}

/// `ln(Φ(b) − Φ(a))` for `a < b`, using the upper tail when both are large.
fn ln_normal_mass(dist: &Normal, a: f64, b: f64) -> f64 {
    if a > 0.0 {
        (dist.sf(a) - dist.sf(b)).ln()
    } else {
        (dist.cdf(b) - dist.cdf(a)).ln()
    }
}

/// Gaussian `S ~ N(0, σ²I)` on `ΔZ²`. The left side uses the exact
/// conditional pmf (a product of normal cell masses); the right side
/// estimates `f_{S−U}` by averaging over `k_inner` fresh dithers, which
/// biases it upward by `O(1/k_inner)`.
pub fn theorem1_check_z2_gaussian(
    sigma: f64,
    delta: f64,
    s: [f64; 2],
    n: usize,
    k_inner: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if n < 2 || k_inner == 0 {
        return Err(Error::Contract(
            "need at least two outer and one inner sample".into(),
        ));
    }
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::Contract(e.to_string()))?;
    let lattice = ScaledProductLattice::uniform(LatticeBasis::new(LatticeKind::Z2), 1, delta)?;
    let h = delta / 2.0;
    let density = |x: &[f64]| {
        use statrs::distribution::Continuous;
        dist.pdf(x[0]) * dist.pdf(x[1])
    };
    let mut rng = stream(seed, 0);
    let mut inner = stream(seed, 1);
    let (mut lhs, mut rhs, mut diff) = (Moments::default(), Moments::default(), Moments::default());
    let mut u = [0.0; 2];
    let mut z = [0i64; 2];
    for _ in 0..n {
        lattice.sample_dither_into(&mut rng, &mut u);
        lattice.quantize_into(&[s[0] + u[0], s[1] + u[1]], &mut z)?;
        let l: f64 = (0..2)
            .map(|j| {
                let c = z[j] as f64 * delta - u[j];
                -ln_normal_mass(&dist, c - h, c + h)
            })
            .sum();
        let eta = [s[0] - u[0], s[1] - u[1]];
        let f = estimate_f_s_minus_u(density, &lattice, &eta, k_inner, &mut inner)?;
        let r = -(delta * delta).ln() - f.ln();
        lhs.push(l);
        rhs.push(r);
        diff.push(l - r);
    }
    let case = format!(
        "z2 gaussian sigma={sigma} delta={delta} s=({}, {}) k_inner={k_inner}",
        s[0], s[1]
    );
    Ok(report(case, lhs, rhs, diff, seed))
}
