//! Probability models used by the losses.

mod gaussian;
mod laplace;
mod mc;
mod theta_prior;

pub use gaussian::{gaussian_kl_analytic, gaussian_kl_sample, GaussianProxyParams};
pub use laplace::{laplace_pmf_log, laplace_rep_cost, LaplaceZModel, RepCostGrad};
pub use mc::{estimate_f_s_minus_u, estimate_f_s_minus_u_with_stderr, Estimate};
pub use theta_prior::{ThetaPrior, ThetaPriorGrad};
