//! Lattice bases, nearest-point quantization, dithers and cell geometry.

mod basis;
mod cell;
pub(crate) mod enumerate;
mod quantize;
mod theta;

pub use basis::{LatticeBasis, LatticeKind};
pub use cell::{
    cell_constants, matched_delta, matched_delta_from, sample_base_dither_into, CellConstants,
    MIN_CELL_SAMPLES,
};
pub use enumerate::DEFAULT_BUDGET;
pub use quantize::{e8_nearest, LatticePoint, ScaledProductLattice};
pub use theta::{theta_closed_form, theta_coefficients, theta_coefficients_with_budget};
