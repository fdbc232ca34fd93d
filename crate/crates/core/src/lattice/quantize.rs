//! Nearest-point quantizers for the base lattices and their scaled products.
//!
//! Every quantizer breaks ties the same way: among equidistant lattice points
//! the lexicographically smallest coefficient vector wins. For the cubic
//! lattices this is round-half-down, so the zero cell of `Z` is `(-1/2, 1/2]`.

use serde::{Deserialize, Serialize};

use super::basis::{LatticeBasis, LatticeKind};
use super::enumerate::{BallEnumerator, DEFAULT_BUDGET};
use crate::error::{check_dim, Error, Result};

/// A point of a [`ScaledProductLattice`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    /// Integer coefficients, one block of `m` after another.
    pub coeffs: Vec<i64>,
    /// `coeffs · diag(Δ₁B, …, Δ_kB)`.
    pub embedding: Vec<f64>,
    /// Per block, the integer squared norm of the de-scaled block point.
    pub norm_sq_unscaled: Vec<u64>,
}

impl LatticePoint {
    pub fn is_origin(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

#[inline]
pub(crate) fn round_half_down(x: f64) -> f64 {
    (x - 0.5).ceil()
}

#[inline]
fn closer(d: f64, c: &[i64], best_d: f64, best_c: &[i64]) -> bool {
    d < best_d || (d == best_d && c < best_c)
}

fn dist_sq_to(basis: &LatticeBasis, x: &[f64], coeffs: &[i64], scratch: &mut [f64]) -> f64 {
    basis.embed_into(coeffs, scratch);
    x.iter()
        .zip(scratch.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn e8_round(x: &[f64; 8]) -> [f64; 8] {
    x.map(round_half_down)
}

/// Rounds the worst-rounded coordinate of `f` the other way.
fn e8_wrong_way(x: &[f64; 8], f: &[f64; 8]) -> [f64; 8] {
    let mut worst = 0;
    let mut worst_err = -1.0;
    for i in 0..8 {
        let err = (x[i] - f[i]).abs();
        if err > worst_err {
            worst_err = err;
            worst = i;
        }
    }
    let mut g = *f;
    g[worst] += if x[worst] - f[worst] > 0.0 { 1.0 } else { -1.0 };
    g
}

fn even_sum(p: &[f64; 8]) -> bool {
    let s: f64 = p.iter().sum();
    (s.round() as i64).rem_euclid(2) == 0
}

/// The candidates f(x), g(x), f(x−½)+½, g(x−½)+½ that lie in E8.
fn e8_candidates(x: &[f64; 8]) -> Vec<[f64; 8]> {
    let mut out = Vec::with_capacity(2);
    let f = e8_round(x);
    let g = e8_wrong_way(x, &f);
    let shifted = x.map(|v| v - 0.5);
    let fh = e8_round(&shifted);
    let gh = e8_wrong_way(&shifted, &fh);
    for cand in [f, g, fh.map(|v| v + 0.5), gh.map(|v| v + 0.5)] {
        if even_sum(&cand) {
            out.push(cand);
        }
    }
    out
}

/// Nearest point of E8 (unscaled, coordinates as in the standard
/// integer/half-integer description) to `x`.
pub fn e8_nearest(x: &[f64]) -> Result<[f64; 8]> {
    check_dim(8, x.len())?;
    let basis = LatticeBasis::new(LatticeKind::E8);
    let mut coeffs = [0i64; 8];
    nearest_base(&basis, x, &mut coeffs);
    let p = basis.embed(&coeffs);
    let mut out = [0.0; 8];
    out.copy_from_slice(&p);
    Ok(out)
}

/// Exact nearest point of the unscaled base lattice; writes coefficients.
pub(crate) fn nearest_base(basis: &LatticeBasis, x: &[f64], out: &mut [i64]) {
    match basis.kind() {
        LatticeKind::Z | LatticeKind::Z2 => {
            for (o, v) in out.iter_mut().zip(x) {
                *o = round_half_down(*v) as i64;
            }
        }
        LatticeKind::A2 => {
            let mut c = [0.0; 2];
            basis.coords_into(x, &mut c);
            let r = [c[0].round() as i64, c[1].round() as i64];
            let mut scratch = [0.0; 2];
            let mut best = [0i64; 2];
            let mut best_d = f64::INFINITY;
            for a in -1..=1 {
                for b in -1..=1 {
                    let cand = [r[0] + a, r[1] + b];
                    let d = dist_sq_to(basis, x, &cand, &mut scratch);
                    if closer(d, &cand, best_d, &best) {
                        best_d = d;
                        best = cand;
                    }
                }
            }
            out[..2].copy_from_slice(&best);
        }
        LatticeKind::E8 => {
            let mut xa = [0.0; 8];
            xa.copy_from_slice(&x[..8]);
            let mut scratch = [0.0; 8];
            let mut best = vec![0i64; 8];
            let mut best_d = f64::INFINITY;
            for cand in e8_candidates(&xa) {
                let coeffs = basis.coeffs_of(&cand);
                let d = dist_sq_to(basis, x, &coeffs, &mut scratch);
                if closer(d, &coeffs, best_d, &best) {
                    best_d = d;
                    best = coeffs;
                }
            }
            out[..8].copy_from_slice(&best);
        }
    }
}

/// Block-diagonal product `diag(Δ₁B, …, Δ_kB)` of scaled copies of a base
/// lattice. Each block is scaled as a whole; per-row scaling is unsupported.
#[derive(Clone, Debug)]
pub struct ScaledProductLattice {
    base: LatticeBasis,
    deltas: Vec<f64>,
}

impl ScaledProductLattice {
    pub fn new(base: LatticeBasis, deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::Contract(
                "a product lattice needs at least one block".into(),
            ));
        }
        if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::Contract(format!(
                "block scale must be positive and finite, got {d}"
            )));
        }
        Ok(ScaledProductLattice { base, deltas })
    }

    pub fn uniform(base: LatticeBasis, blocks: usize, delta: f64) -> Result<Self> {
        Self::new(base, vec![delta; blocks])
    }

    /// A single unscaled copy of `kind`.
    pub fn unit(kind: LatticeKind) -> Self {
        ScaledProductLattice {
            base: LatticeBasis::new(kind),
            deltas: vec![1.0],
        }
    }

    pub fn base(&self) -> &LatticeBasis {
        &self.base
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn blocks(&self) -> usize {
        self.deltas.len()
    }

    pub fn block_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks() * self.base.dim()
    }

    pub fn log_volume(&self) -> f64 {
        let m = self.base.dim() as f64;
        self.deltas
            .iter()
            .map(|d| m * d.ln() + self.base.det_abs().ln())
            .sum()
    }

    /// `∏ Δᵢ^m · |det B|`.
    pub fn volume(&self) -> f64 {
        self.log_volume().exp()
    }

    pub fn embed_into(&self, coeffs: &[i64], out: &mut [f64]) {
        let m = self.base.dim();
        for (b, delta) in self.deltas.iter().enumerate() {
            let span = b * m..(b + 1) * m;
            self.base
                .embed_into(&coeffs[span.clone()], &mut out[span.clone()]);
            out[span].iter_mut().for_each(|v| *v *= delta);
        }
    }

    /// Builds the full point record for a coefficient vector.
    pub fn point(&self, coeffs: Vec<i64>) -> Result<LatticePoint> {
        check_dim(self.total_dim(), coeffs.len())?;
        let m = self.base.dim();
        let mut embedding = vec![0.0; self.total_dim()];
        self.embed_into(&coeffs, &mut embedding);
        let norm_sq_unscaled = coeffs.chunks(m).map(|c| self.base.norm_sq_int(c)).collect();
        Ok(LatticePoint {
            coeffs,
            embedding,
            norm_sq_unscaled,
        })
    }

    /// Nearest-point quantization without building a [`LatticePoint`].
    pub fn quantize_into(&self, v: &[f64], coeffs: &mut [i64]) -> Result<()> {
        check_dim(self.total_dim(), v.len())?;
        check_dim(self.total_dim(), coeffs.len())?;
        let m = self.base.dim();
        let mut x = [0.0; 8];
        for (b, delta) in self.deltas.iter().enumerate() {
            for j in 0..m {
                x[j] = v[b * m + j] / delta;
            }
            nearest_base(&self.base, &x[..m], &mut coeffs[b * m..(b + 1) * m]);
        }
        Ok(())
    }

    /// The closest lattice point to `v` in Euclidean distance.
    pub fn nearest_point(&self, v: &[f64]) -> Result<LatticePoint> {
        let mut coeffs = vec![0i64; self.total_dim()];
        self.quantize_into(v, &mut coeffs)?;
        self.point(coeffs)
    }

    /// Exhaustive nearest point over all lattice points within `radius` of
    /// `v` (per block, in scaled units). `None` uses 1.5× the covering radius.
    pub fn brute_force_nearest(&self, v: &[f64], radius: Option<f64>) -> Result<LatticePoint> {
        self.brute_force_nearest_with_budget(v, radius, DEFAULT_BUDGET)
    }

    pub fn brute_force_nearest_with_budget(
        &self,
        v: &[f64],
        radius: Option<f64>,
        budget: usize,
    ) -> Result<LatticePoint> {
        check_dim(self.total_dim(), v.len())?;
        let m = self.base.dim();
        let enumerator = BallEnumerator::new(&self.base);
        let mut coeffs = vec![0i64; self.total_dim()];
        let mut scratch = vec![0.0; m];
        let mut center = vec![0.0; m];
        for (b, delta) in self.deltas.iter().enumerate() {
            let x: Vec<f64> = v[b * m..(b + 1) * m].iter().map(|c| c / delta).collect();
            let r = match radius {
                Some(r) => r / delta,
                None => 1.5 * self.base.covering_radius(),
            };
            self.base.coords_into(&x, &mut center);
            let mut best: Option<(f64, Vec<i64>)> = None;
            enumerator.enumerate(&center, r * r + 1e-9, budget, &mut |cand| {
                let d = dist_sq_to(&self.base, &x, cand, &mut scratch);
                let take = match &best {
                    None => true,
                    Some((bd, bc)) => closer(d, cand, *bd, bc),
                };
                if take {
                    best = Some((d, cand.to_vec()));
                }
            })?;
            let (_, c) = best.ok_or_else(|| {
                Error::Contract(format!("no lattice point within radius {r} of block {b}"))
            })?;
            coeffs[b * m..(b + 1) * m].copy_from_slice(&c);
        }
        self.point(coeffs)
    }
}
