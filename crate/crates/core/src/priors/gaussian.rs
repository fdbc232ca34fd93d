//! KL terms of the Gaussian proxy.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianProxyParams {
    /// Encoder noise variance `σ²_{U_G}`.
    pub sigma_ug_sq: f64,
    /// Prior spread variance `σ²_{U_S}`.
    pub sigma_us_sq: f64,
    pub m: usize,
}

impl GaussianProxyParams {
    pub fn new(sigma_ug_sq: f64, sigma_us_sq: f64, m: usize) -> Result<Self> {
        let p = GaussianProxyParams {
            sigma_ug_sq,
            sigma_us_sq,
            m,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_ug_sq > 0.0 && self.sigma_ug_sq.is_finite())
            || !(self.sigma_us_sq >= 0.0 && self.sigma_us_sq.is_finite())
        {
            return Err(Error::Contract(format!(
                "proxy variances must be positive, got {} and {}",
                self.sigma_ug_sq, self.sigma_us_sq
            )));
        }
        Ok(())
    }

    /// Variance of the marginal `N(0, (σ²_{U_G}+σ²_{U_S}) I)`.
    pub fn total_var(&self) -> f64 {
        self.sigma_ug_sq + self.sigma_us_sq
    }
}

/// Single-sample KL estimate for the noisy latent `e_x − u_g`, where `u_g`
/// is the encoder noise drawn from `N(0, σ²_{U_G} I)`.
pub fn gaussian_kl_sample(e_x: &[f64], u_g: &[f64], params: &GaussianProxyParams) -> Result<f64> {
    params.validate()?;
    check_dim(params.m, e_x.len())?;
    check_dim(params.m, u_g.len())?;
    let s = params.total_var();
    let diff: f64 = e_x.iter().zip(u_g).map(|(e, u)| (e - u).powi(2)).sum();
    let noise: f64 = u_g.iter().map(|u| u * u).sum();
    let m = params.m as f64;
    Ok(0.5 * (diff / s - noise / params.sigma_ug_sq - m * (params.sigma_ug_sq / s).ln()))
}

/// `KL(N(e_x, σ²_{U_G} I) ‖ N(0, (σ²_{U_G}+σ²_{U_S}) I))`.
pub fn gaussian_kl_analytic(e_x: &[f64], params: &GaussianProxyParams) -> Result<f64> {
    params.validate()?;
    check_dim(params.m, e_x.len())?;
    let s = params.total_var();
    let m = params.m as f64;
    let norm: f64 = e_x.iter().map(|e| e * e).sum();
    Ok(0.5 * (m * params.sigma_ug_sq / s + norm / s - m + m * (s / params.sigma_ug_sq).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cases() {
        let p = GaussianProxyParams::new(0.7, 0.0, 2).unwrap();
        assert_eq!(
            gaussian_kl_sample(&[0.0, 0.0], &[0.0, 0.0], &p).unwrap(),
            0.0
        );
        assert!(gaussian_kl_analytic(&[0.0, 0.0], &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn analytic_example() {
        let p = GaussianProxyParams::new(1.0, 1.0, 1).unwrap();
        let kl = gaussian_kl_analytic(&[0.0], &p).unwrap();
        assert!((kl - 0.5 * (2f64.ln() - 0.5)).abs() < 1e-15);
        assert!((kl - 0.0966).abs() < 1e-4);
    }

    #[test]
    fn invalid_inputs() {
        assert!(GaussianProxyParams::new(0.0, 1.0, 1).is_err());
        assert!(GaussianProxyParams::new(1.0, -1.0, 1).is_err());
        let p = GaussianProxyParams::new(1.0, 1.0, 2).unwrap();
        assert!(gaussian_kl_sample(&[0.0], &[0.0, 0.0], &p).is_err());
    }
}
