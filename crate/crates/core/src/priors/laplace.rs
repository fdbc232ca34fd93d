//! Closed forms for the scaled integer lattice with a Laplacian `S`.
//!
//! With `S ~ Laplace(α)` and `U` uniform on the cell of `ΔZ`, both the
//! continuous representation cost `log f_U(u)/f_{S−U}(s−u)` and the
//! conditional pmf `p_{Z|U}` have two-branch closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceZModel {
    pub alpha: f64,
    pub delta: f64,
}

/// Value and partial derivatives of the continuous representation cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepCostGrad {
    pub value: f64,
    pub d_eta: f64,
    pub d_alpha: f64,
    pub d_delta: f64,
}

/// `ln sinh(x)` for `x > 0`, stable for large arguments.
fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

fn coth(x: f64) -> f64 {
    if x > 20.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

impl LaplaceZModel {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && delta > 0.0 && delta.is_finite()) {
            return Err(Error::Contract(format!(
                "Laplace+Z model needs positive finite alpha and delta, got {alpha}, {delta}"
            )));
        }
        Ok(LaplaceZModel { alpha, delta })
    }

    /// `e^{−αΔ/2} cosh(αη)`, written to avoid overflow for large `α`.
    fn damped_cosh(&self, eta: f64) -> f64 {
        let a = self.alpha;
        let h = self.delta / 2.0;
        0.5 * ((a * (eta - h)).exp() + (-a * (eta + h)).exp())
    }

    /// `log f_U(u) / f_{S−U}(s−u)` in nats, for `eta = s − u`.
    pub fn rep_cost(&self, eta: f64) -> f64 {
        if eta.abs() < self.delta / 2.0 {
            -(-self.damped_cosh(eta)).ln_1p()
        } else {
            self.alpha * eta.abs() - ln_sinh(self.alpha * self.delta / 2.0)
        }
    }

    /// [`rep_cost`](Self::rep_cost) with derivatives w.r.t. `η`, `α`, `Δ`.
    pub fn rep_cost_grad(&self, eta: f64) -> RepCostGrad {
        let a = self.alpha;
        let d = self.delta;
        let h = d / 2.0;
        if eta.abs() < h {
            let damp = self.damped_cosh(eta);
            // e^{−αΔ/2} sinh(αη)
            let damp_sinh = 0.5 * ((a * (eta - h)).exp() - (-a * (eta + h)).exp());
            let inv = 1.0 / (1.0 - damp);
            RepCostGrad {
                value: -(-damp).ln_1p(),
                d_eta: inv * a * damp_sinh,
                d_alpha: inv * (-h * damp + eta * damp_sinh),
                d_delta: inv * (-a / 2.0) * damp,
            }
        } else {
            let c = coth(a * h);
            RepCostGrad {
                value: a * eta.abs() - ln_sinh(a * h),
                d_eta: a * eta.signum(),
                d_alpha: eta.abs() - h * c,
                d_delta: -(a / 2.0) * c,
            }
        }
    }

    /// `log p_{Z|U}(z|u)`: probability that `K(S+u)` is the lattice point `zΔ`.
    pub fn pmf_log(&self, z: i64, u: f64) -> Result<f64> {
        let h = self.delta / 2.0;
        // closed on both ends to absorb the last-ulp wobble of de-scaling
        if !(u >= -h && u <= h) {
            return Err(Error::Contract(format!(
                "dither {u} lies outside the cell (-{h}, {h}]"
            )));
        }
        Ok(self.pmf_log_unchecked(z, u))
    }

    pub(crate) fn pmf_log_unchecked(&self, z: i64, u: f64) -> f64 {
        if z == 0 {
            (-self.damped_cosh(u)).ln_1p()
        } else {
            -(self.alpha * (z as f64 * self.delta - u).abs())
                + ln_sinh(self.alpha * self.delta / 2.0)
        }
    }

    /// Density of the Laplacian `S` itself.
    pub fn density_s(&self, s: f64) -> f64 {
        0.5 * self.alpha * (-self.alpha * s.abs()).exp()
    }

    /// Closed-form density `f_{S−U}(η)`.
    pub fn density_s_minus_u(&self, eta: f64) -> f64 {
        (-self.rep_cost(eta)).exp() / self.delta
    }
}

/// Free-function form of [`LaplaceZModel::rep_cost`].
pub fn laplace_rep_cost(model: &LaplaceZModel, s_minus_u: f64) -> f64 {
    model.rep_cost(s_minus_u)
}

/// Free-function form of [`LaplaceZModel::pmf_log`].
pub fn laplace_pmf_log(model: &LaplaceZModel, z: i64, u: f64) -> Result<f64> {
    model.pmf_log(z, u)
}
