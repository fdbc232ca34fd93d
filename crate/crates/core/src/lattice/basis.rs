use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four base lattices with exact nearest-neighbor algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LatticeKind {
    Z,
    Z2,
    A2,
    E8,
}

impl LatticeKind {
    pub const ALL: [LatticeKind; 4] = [
        LatticeKind::Z,
        LatticeKind::Z2,
        LatticeKind::A2,
        LatticeKind::E8,
    ];

    pub fn dim(self) -> usize {
        match self {
            LatticeKind::Z => 1,
            LatticeKind::Z2 | LatticeKind::A2 => 2,
            LatticeKind::E8 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Z => "Z",
            LatticeKind::Z2 => "Z2",
            LatticeKind::A2 => "A2",
            LatticeKind::E8 => "E8",
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(LatticeKind::Z),
            "Z2" | "z2" => Ok(LatticeKind::Z2),
            "A2" | "a2" => Ok(LatticeKind::A2),
            "E8" | "e8" => Ok(LatticeKind::E8),
            other => Err(Error::UnknownLattice(other.to_string())),
        }
    }
}

/// A full-rank basis `B` in row-vector convention: lattice points are `i·B`
/// for integer row vectors `i`.
#[derive(Clone, Debug)]
pub struct LatticeBasis {
    kind: LatticeKind,
    dim: usize,
    rows: Vec<f64>,
    inverse: Vec<f64>,
    det_abs: f64,
}

impl LatticeBasis {
    pub fn new(kind: LatticeKind) -> Self {
        let rows = match kind {
            LatticeKind::Z => vec![1.0],
            LatticeKind::Z2 => vec![1.0, 0.0, 0.0, 1.0],
            LatticeKind::A2 => vec![0.0, 1.0, (3.0f64 / 4.0).sqrt(), 0.5],
            LatticeKind::E8 => {
                let mut b = vec![0.0; 64];
                b[0] = 2.0;
                for r in 1..7 {
                    b[r * 8 + r - 1] = -1.0;
                    b[r * 8 + r] = 1.0;
                }
                for c in 0..8 {
                    b[7 * 8 + c] = 0.5;
                }
                b
            }
        };
        let dim = kind.dim();
        let mat = DMatrix::from_row_slice(dim, dim, &rows);
        let det_abs = mat.determinant().abs();
        let inv = mat
            .try_inverse()
            .expect("built-in lattice bases are full rank");
        let mut inverse = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                inverse.push(inv[(r, c)]);
            }
        }
        LatticeBasis {
            kind,
            dim,
            rows,
            inverse,
            det_abs,
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row `i` of the basis matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn det_abs(&self) -> f64 {
        self.det_abs
    }

    /// Cell volume, `|det B|`.
    pub fn volume(&self) -> f64 {
        self.det_abs
    }

    /// Published normalized second moments, rounded to four digits.
    pub fn published_nsm(&self) -> f64 {
        match self.kind {
            LatticeKind::Z | LatticeKind::Z2 => 0.0833,
            LatticeKind::A2 => 0.0802,
            LatticeKind::E8 => 0.0717,
        }
    }

    /// Exact normalized second moment of the Voronoi cell.
    pub fn exact_nsm(&self) -> f64 {
        match self.kind {
            LatticeKind::Z | LatticeKind::Z2 => 1.0 / 12.0,
            LatticeKind::A2 => 5.0 / (36.0 * 3.0f64.sqrt()),
            LatticeKind::E8 => 929.0 / 12960.0,
        }
    }

    /// Per-dimension second moment of the unscaled cell.
    pub fn exact_second_moment(&self) -> f64 {
        self.exact_nsm() * self.det_abs.powf(2.0 / self.dim as f64)
    }

    /// Second moment known in closed form without reference to tabulated
    /// constants (cubic cells only).
    pub fn analytic_second_moment(&self) -> Option<f64> {
        match self.kind {
            LatticeKind::Z | LatticeKind::Z2 => Some(1.0 / 12.0),
            _ => None,
        }
    }

    /// Largest distance from any point of space to its nearest lattice point.
    pub fn covering_radius(&self) -> f64 {
        match self.kind {
            LatticeKind::Z => 0.5,
            LatticeKind::Z2 => std::f64::consts::FRAC_1_SQRT_2,
            LatticeKind::A2 => 1.0 / 3.0f64.sqrt(),
            LatticeKind::E8 => 1.0,
        }
    }

    /// `out = coeffs · B`.
    pub fn embed_into(&self, coeffs: &[i64], out: &mut [f64]) {
        let m = self.dim;
        out[..m].iter_mut().for_each(|o| *o = 0.0);
        for (k, &ik) in coeffs[..m].iter().enumerate() {
            if ik == 0 {
                continue;
            }
            let ik = ik as f64;
            for (o, b) in out.iter_mut().zip(self.row(k)) {
                *o += ik * b;
            }
        }
    }

    pub fn embed(&self, coeffs: &[i64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.embed_into(coeffs, &mut out);
        out
    }

    /// Real coefficients `x · B⁻¹`.
    pub fn coords_into(&self, x: &[f64], out: &mut [f64]) {
        let m = self.dim;
        for (j, o) in out[..m].iter_mut().enumerate() {
            *o = (0..m).map(|k| x[k] * self.inverse[k * m + j]).sum();
        }
    }

    /// Integer coefficients of a point known to lie on the lattice.
    pub fn coeffs_of(&self, point: &[f64]) -> Vec<i64> {
        let mut c = vec![0.0; self.dim];
        self.coords_into(point, &mut c);
        c.iter().map(|v| v.round() as i64).collect()
    }

    /// Gram matrix `B Bᵀ`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.dim;
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                g[i * m + j] = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
        g
    }

    /// Squared norm of an integer-coefficient point, exact for these lattices.
    pub fn norm_sq_int(&self, coeffs: &[i64]) -> u64 {
        let mut p = vec![0.0; self.dim];
        self.embed_into(coeffs, &mut p);
        let n: f64 = p.iter().map(|v| v * v).sum();
        n.round() as u64
    }
}

impl PartialEq for LatticeBasis {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinants() {
        assert_eq!(LatticeBasis::new(LatticeKind::Z).det_abs(), 1.0);
        assert_eq!(LatticeBasis::new(LatticeKind::Z2).det_abs(), 1.0);
        let a2 = LatticeBasis::new(LatticeKind::A2);
        assert!((a2.det_abs() - 3.0f64.sqrt() / 2.0).abs() < 1e-12);
        let e8 = LatticeBasis::new(LatticeKind::E8);
        assert!((e8.det_abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coeff_roundtrip() {
        let e8 = LatticeBasis::new(LatticeKind::E8);
        let c = [3, -1, 0, 2, -5, 1, 1, 4];
        let p = e8.embed(&c);
        assert_eq!(e8.coeffs_of(&p), c.to_vec());
    }

    #[test]
    fn parse_names() {
        assert_eq!("E8".parse::<LatticeKind>().unwrap(), LatticeKind::E8);
        assert!("D4".parse::<LatticeKind>().is_err());
    }

    #[test]
    fn exact_nsm_matches_published_digits() {
        for kind in LatticeKind::ALL {
            let b = LatticeBasis::new(kind);
            assert!((b.exact_nsm() - b.published_nsm()).abs() < 5e-5, "{kind}");
        }
    }
}
