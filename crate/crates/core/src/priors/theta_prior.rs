//! Lattice-point prior built from the theta series.
//!
//! Points with squared norm `‖a‖² ≥ t` get mass
//! `softmax(Ψ)_{‖a‖²} / θ_{‖a‖²}`: a learned distribution over norm shells,
//! spread evenly within each shell. Points with `‖a‖² < t` get a learned
//! pmf that depends on the dither through an affine map `U ↦ logits`. A
//! learned binary flag chooses between the two sub-models and its cost is
//! part of the code length. With `t = 0` there is no small-norm table and no
//! flag.
//!
//! The prior lives on the unscaled base lattice. Callers pass de-scaled
//! block coefficients and the de-scaled block dither.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::lattice::enumerate::BallEnumerator;
use crate::lattice::{theta_closed_form, LatticeBasis, LatticeKind, LatticePoint, DEFAULT_BUDGET};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaPrior {
    pub kind: LatticeKind,
    pub max_norm_sq: u64,
    pub threshold: u64,
    /// Shell logits, indexed by squared norm `0..=max_norm_sq`.
    pub psi: Vec<f64>,
    pub flag_logit: f64,
    /// Coefficients of the sub-threshold points, in the order of `small_b`.
    pub small_points: Vec<Vec<i64>>,
    /// `small_points.len() × m`, row-major.
    pub small_w: Vec<f64>,
    pub small_b: Vec<f64>,
    /// Theta coefficients indexed by squared norm.
    pub theta: Vec<u64>,
}

/// Gradient buffers shaped like the learnable part of a [`ThetaPrior`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ThetaPriorGrad {
    pub psi: Vec<f64>,
    pub flag_logit: f64,
    pub small_w: Vec<f64>,
    pub small_b: Vec<f64>,
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl ThetaPrior {
    /// Uniform shell logits, zero table, flag at even odds.
    pub fn new(kind: LatticeKind, max_norm_sq: u64, threshold: u64) -> Result<Self> {
        if threshold > max_norm_sq {
            return Err(Error::Contract(format!(
                "threshold {threshold} exceeds max modeled norm {max_norm_sq}"
            )));
        }
        let basis = LatticeBasis::new(kind);
        let theta = theta_closed_form(kind, max_norm_sq);
        if !theta[threshold as usize..].iter().any(|&c| c > 0) {
            return Err(Error::Contract(
                "no nonempty shell at or above the threshold".into(),
            ));
        }
        let mut small_points = Vec::new();
        if threshold > 0 {
            small_points = enumerate_small(&basis, threshold)?;
        }
        let m = kind.dim();
        let n_small = small_points.len();
        Ok(ThetaPrior {
            kind,
            max_norm_sq,
            threshold,
            psi: vec![0.0; max_norm_sq as usize + 1],
            flag_logit: 0.0,
            small_points,
            small_w: vec![0.0; n_small * m],
            small_b: vec![0.0; n_small],
            theta,
        })
    }

    /// Initializes every learnable parameter so that the prior is the
    /// lattice discretization of an isotropic Gaussian with per-coordinate
    /// variance `tau_sq` (in unscaled lattice units).
    pub fn init_gaussian(&mut self, tau_sq: f64) {
        let shape = |n: u64| -(n as f64) / (2.0 * tau_sq);
        for (n, p) in self.psi.iter_mut().enumerate() {
            *p = if self.theta[n] > 0 {
                (self.theta[n] as f64).ln() + shape(n as u64)
            } else {
                0.0
            };
        }
        let norms: Vec<u64> = self.small_points.iter().map(|c| self.norm_sq(c)).collect();
        for (b, &n) in self.small_b.iter_mut().zip(&norms) {
            *b = shape(n);
        }
        self.small_w.iter_mut().for_each(|w| *w = 0.0);
        if self.threshold > 0 {
            let small = log_sum_exp(norms.iter().map(|&n| shape(n)));
            let large = log_sum_exp(
                self.shells()
                    .map(|n| (self.theta[n as usize] as f64).ln() + shape(n)),
            );
            self.flag_logit = small - large;
        }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn norm_sq(&self, coeffs: &[i64]) -> u64 {
        LatticeBasis::new(self.kind).norm_sq_int(coeffs)
    }

    /// Nonempty shells modeled by the shell softmax.
    pub fn shells(&self) -> impl Iterator<Item = u64> + Clone + '_ {
        (self.threshold..=self.max_norm_sq).filter(move |&n| self.theta[n as usize] > 0)
    }

    fn shell_lse(&self) -> f64 {
        log_sum_exp(self.shells().map(|n| self.psi[n as usize]))
    }

    fn small_logits(&self, u: &[f64]) -> Vec<f64> {
        let m = self.dim();
        self.small_b
            .iter()
            .enumerate()
            .map(|(i, b)| b + (0..m).map(|j| self.small_w[i * m + j] * u[j]).sum::<f64>())
            .collect()
    }

    fn small_index(&self, coeffs: &[i64]) -> Option<usize> {
        self.small_points
            .iter()
            .position(|p| p.as_slice() == coeffs)
    }

    /// Log-probability of the base-lattice point `coeffs` given the
    /// de-scaled dither `u`.
    pub fn log_pmf(&self, coeffs: &[i64], u: &[f64]) -> Result<f64> {
        check_dim(self.dim(), coeffs.len())?;
        check_dim(self.dim(), u.len())?;
        let n = self.norm_sq(coeffs);
        if n > self.max_norm_sq {
            return Err(Error::OutOfSupport {
                norm_sq: n,
                max_norm_sq: self.max_norm_sq,
            });
        }
        Ok(self.log_pmf_in_support(coeffs, n, u))
    }

    fn log_pmf_in_support(&self, coeffs: &[i64], n: u64, u: &[f64]) -> f64 {
        if n >= self.threshold {
            let flag = if self.threshold > 0 {
                log_sigmoid(-self.flag_logit)
            } else {
                0.0
            };
            flag + self.psi[n as usize] - self.shell_lse() - (self.theta[n as usize] as f64).ln()
        } else {
            let i = self
                .small_index(coeffs)
                .expect("every sub-threshold point is tabulated");
            let logits = self.small_logits(u);
            log_sigmoid(self.flag_logit) + logits[i] - log_sum_exp(logits.iter().copied())
        }
    }

    /// Log-probability of a point of a product lattice built on this
    /// prior's base lattice: the sum of per-block log-probabilities given
    /// the de-scaled block dithers `unit_dither`.
    pub fn log_pmf_point(&self, point: &LatticePoint, unit_dither: &[f64]) -> Result<f64> {
        let m = self.dim();
        check_dim(point.coeffs.len(), unit_dither.len())?;
        point
            .coeffs
            .chunks(m)
            .zip(unit_dither.chunks(m))
            .map(|(c, u)| self.log_pmf(c, u))
            .sum()
    }

    pub fn zero_grad(&self) -> ThetaPriorGrad {
        ThetaPriorGrad {
            psi: vec![0.0; self.psi.len()],
            flag_logit: 0.0,
            small_w: vec![0.0; self.small_w.len()],
            small_b: vec![0.0; self.small_b.len()],
        }
    }

    /// Code length `−log p(a|u)` of a block; adds `weight · ∂(−log p)/∂θ`
    /// to `grad`. Points beyond the modeled range are charged as the largest
    /// modeled shell plus `penalty` nats.
    pub fn code_length_grad(
        &self,
        coeffs: &[i64],
        u: &[f64],
        penalty: f64,
        weight: f64,
        grad: &mut ThetaPriorGrad,
    ) -> f64 {
        let mut n = self.norm_sq(coeffs);
        let mut extra = 0.0;
        if n > self.max_norm_sq {
            n = self.shells().last().expect("prior has a nonempty shell");
            extra = penalty;
        }
        if n >= self.threshold {
            let lse = self.shell_lse();
            for s in self.shells() {
                grad.psi[s as usize] += weight * (self.psi[s as usize] - lse).exp();
            }
            grad.psi[n as usize] -= weight;
            let mut value = -(self.psi[n as usize] - lse) + (self.theta[n as usize] as f64).ln();
            if self.threshold > 0 {
                value -= log_sigmoid(-self.flag_logit);
                grad.flag_logit += weight * sigmoid(self.flag_logit);
            }
            value + extra
        } else {
            let m = self.dim();
            let i = self
                .small_index(coeffs)
                .expect("every sub-threshold point is tabulated");
            let logits = self.small_logits(u);
            let lse = log_sum_exp(logits.iter().copied());
            for (k, l) in logits.iter().enumerate() {
                let g = weight * ((l - lse).exp() - if k == i { 1.0 } else { 0.0 });
                grad.small_b[k] += g;
                for (w, uj) in grad.small_w[k * m..(k + 1) * m].iter_mut().zip(u) {
                    *w += g * uj;
                }
            }
            grad.flag_logit -= weight * sigmoid(-self.flag_logit);
            -(logits[i] - lse) - log_sigmoid(self.flag_logit)
        }
    }
}

fn enumerate_small(basis: &LatticeBasis, threshold: u64) -> Result<Vec<Vec<i64>>> {
    let enumerator = BallEnumerator::new(basis);
    let center = vec![0.0; basis.dim()];
    let mut out = Vec::new();
    enumerator.enumerate(&center, threshold as f64 - 0.5, DEFAULT_BUDGET, &mut |c| {
        if basis.norm_sq_int(c) < threshold {
            out.push(c.to_vec());
        }
    })?;
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::theta_coefficients;

    #[test]
    fn uniform_psi_no_threshold() {
        let p = ThetaPrior::new(LatticeKind::Z2, 10, 0).unwrap();
        let shells = p.shells().count() as f64;
        // (1,2) has squared norm 5, θ₅ = 8
        let lp = p.log_pmf(&[1, 2], &[0.0, 0.0]).unwrap();
        assert!((lp - (-shells.ln() - 8f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn shell_symmetry() {
        let mut p = ThetaPrior::new(LatticeKind::A2, 20, 3).unwrap();
        p.init_gaussian(2.0);
        p.psi[7] += 0.3;
        // two different points of norm 7
        let a = [2, 1];
        let b = [-3, 1];
        assert_eq!(LatticeBasis::new(LatticeKind::A2).norm_sq_int(&a), 7);
        assert_eq!(LatticeBasis::new(LatticeKind::A2).norm_sq_int(&b), 7);
        for u in [[0.0, 0.0], [0.2, -0.1]] {
            assert_eq!(p.log_pmf(&a, &u).unwrap(), p.log_pmf(&b, &u).unwrap());
        }
    }

    #[test]
    fn small_points_match_theta() {
        for (kind, t) in [
            (LatticeKind::Z2, 3),
            (LatticeKind::A2, 4),
            (LatticeKind::E8, 3),
        ] {
            let p = ThetaPrior::new(kind, 12, t).unwrap();
            let expected: u64 = theta_coefficients(&LatticeBasis::new(kind), t - 1)
                .unwrap()
                .values()
                .sum();
            assert_eq!(p.small_points.len() as u64, expected, "{kind}");
        }
    }

    #[test]
    fn out_of_support() {
        let p = ThetaPrior::new(LatticeKind::Z, 4, 0).unwrap();
        let err = p.log_pmf(&[3], &[0.0]).unwrap_err();
        assert!(matches!(
            err,
            Error::OutOfSupport {
                norm_sq: 9,
                max_norm_sq: 4
            }
        ));
    }

    #[test]
    fn bad_threshold() {
        assert!(ThetaPrior::new(LatticeKind::Z, 4, 5).is_err());
    }

    #[test]
    fn code_length_grad_matches_finite_differences() {
        let mut p = ThetaPrior::new(LatticeKind::A2, 12, 4).unwrap();
        p.init_gaussian(1.5);
        for (i, w) in p.small_w.iter_mut().enumerate() {
            *w = 0.1 * ((i % 5) as f64 - 2.0);
        }
        let u = [0.13, -0.21];
        for coeffs in [[0i64, 0], [1, 0], [2, 1], [1, -3]] {
            let mut g = p.zero_grad();
            p.code_length_grad(&coeffs, &u, 0.0, 1.0, &mut g);
            let h = 1e-6;
            let f = |q: &ThetaPrior| -q.log_pmf(&coeffs, &u).unwrap();
            for k in 0..p.psi.len() {
                let mut a = p.clone();
                a.psi[k] += h;
                let mut b = p.clone();
                b.psi[k] -= h;
                assert!(((f(&a) - f(&b)) / (2.0 * h) - g.psi[k]).abs() < 1e-7);
            }
            for k in 0..p.small_w.len() {
                let mut a = p.clone();
                a.small_w[k] += h;
                let mut b = p.clone();
                b.small_w[k] -= h;
                assert!(((f(&a) - f(&b)) / (2.0 * h) - g.small_w[k]).abs() < 1e-7);
            }
            let mut a = p.clone();
            a.flag_logit += h;
            let mut b = p.clone();
            b.flag_logit -= h;
            assert!(((f(&a) - f(&b)) / (2.0 * h) - g.flag_logit).abs() < 1e-7);
        }
    }
}
