//! Exhaustive enumeration of lattice points inside a ball (Fincke–Pohst).
//!
//! Writes the squared distance `‖(i − c)·B‖²` as a sum of squares over the
//! coefficients, then walks the coefficient tree from the last coordinate to
//! the first, pruning every branch whose partial sum leaves the ball.

use super::basis::LatticeBasis;
use crate::error::{Error, Result};

/// Default cap on the number of points a single enumeration may produce.
pub const DEFAULT_BUDGET: usize = 20_000_000;

pub(crate) struct BallEnumerator {
    m: usize,
    q: Vec<f64>,
}

impl BallEnumerator {
    pub fn new(basis: &LatticeBasis) -> Self {
        let m = basis.dim();
        let mut q = basis.gram();
        for i in 0..m {
            for j in (i + 1)..m {
                q[j * m + i] = q[i * m + j];
                q[i * m + j] /= q[i * m + i];
            }
            for k in (i + 1)..m {
                for l in k..m {
                    q[k * m + l] -= q[k * m + i] * q[i * m + l];
                }
            }
        }
        BallEnumerator { m, q }
    }

    /// Calls `visit` with the coefficients of every lattice point whose
    /// embedding lies within `sqrt(radius_sq)` of the point with real
    /// coefficients `center`. Returns the number of points visited.
    pub fn enumerate(
        &self,
        center: &[f64],
        radius_sq: f64,
        budget: usize,
        visit: &mut dyn FnMut(&[i64]),
    ) -> Result<usize> {
        let mut coeffs = vec![0i64; self.m];
        let mut count = 0usize;
        self.level(
            self.m - 1,
            center,
            &mut coeffs,
            0.0,
            radius_sq,
            &mut count,
            budget,
            visit,
        )?;
        Ok(count)
    }

    #[allow(clippy::too_many_arguments)]
    fn level(
        &self,
        k: usize,
        center: &[f64],
        coeffs: &mut [i64],
        partial: f64,
        radius_sq: f64,
        count: &mut usize,
        budget: usize,
        visit: &mut dyn FnMut(&[i64]),
    ) -> Result<()> {
        let m = self.m;
        let shift: f64 = ((k + 1)..m)
            .map(|j| self.q[k * m + j] * (coeffs[j] as f64 - center[j]))
            .sum();
        let mid = center[k] - shift;
        let qkk = self.q[k * m + k];
        let half = ((radius_sq - partial).max(0.0) / qkk).sqrt();
        let lo = (mid - half).ceil() as i64;
        let hi = (mid + half).floor() as i64;
        for i in lo..=hi {
            let term = qkk * (i as f64 - mid).powi(2);
            let next = partial + term;
            if next > radius_sq {
                continue;
            }
            coeffs[k] = i;
            if k == 0 {
                *count += 1;
                if *count > budget {
                    return Err(Error::Budget { budget });
                }
                visit(coeffs);
            } else {
                self.level(k - 1, center, coeffs, next, radius_sq, count, budget, visit)?;
            }
        }
        coeffs[k] = 0;
        Ok(())
    }
}
