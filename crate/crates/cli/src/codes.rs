//! Codes file: little-endian `n: u32`, `t: u32`, then `n` rows of `t`
//! `i32` lattice coefficients. A JSON sidecar records how to rebuild the
//! dithers and the code length of every row.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use lattice_vae::data::Split;
use lattice_vae::lattice::LatticeKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodesSidecar {
    pub format: String,
    pub version: u32,
    pub lattice: LatticeKind,
    /// Per-block scales of the code lattice.
    pub deltas: Vec<f64>,
    /// Row `r` used the unit dither drawn from stream `indices[r]` of this seed.
    pub dither_seed: u64,
    pub split: Split,
    pub indices: Vec<usize>,
    /// `−log p(code | dither)` per row, nats.
    pub code_lengths: Vec<f64>,
    pub mean_code_length: f64,
    pub code_length_stderr: f64,
}

pub fn write_codes(path: &Path, t: usize, rows: &[Vec<i64>]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + 4 * t * rows.len());
    bytes.extend_from_slice(&u32::try_from(rows.len())?.to_le_bytes());
    bytes.extend_from_slice(&u32::try_from(t)?.to_le_bytes());
    for row in rows {
        ensure!(
            row.len() == t,
            "code row has {} entries, expected {t}",
            row.len()
        );
        for &c in row {
            let c =
                i32::try_from(c).with_context(|| format!("coefficient {c} does not fit in i32"))?;
            bytes.extend_from_slice(&c.to_le_bytes());
        }
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Returns `t` and the coefficient rows.
pub fn read_codes(path: &Path) -> Result<(usize, Vec<Vec<i64>>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() < 8 {
        bail!("codes file {} is shorter than its header", path.display());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (n, t) = (word(0), word(4));
    let expected = n
        .checked_mul(t)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(8))
        .context("codes header overflows")?;
    ensure!(
        bytes.len() == expected,
        "codes file has {} bytes, header implies {expected}",
        bytes.len()
    );
    let rows = bytes[8..]
        .chunks_exact(4 * t.max(1))
        .take(n)
        .map(|row| {
            row.chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()) as i64)
                .collect()
        })
        .collect::<Vec<Vec<i64>>>();
    Ok((t, if t == 0 { vec![Vec::new(); n] } else { rows }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        let rows = vec![vec![1, -2, 3], vec![0, 7, -40000]];
        write_codes(&path, 3, &rows).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &(-2i32).to_le_bytes());
        assert_eq!(read_codes(&path).unwrap(), (3, rows));
    }

    #[test]
    fn empty_and_truncated_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        write_codes(&path, 8, &[]).unwrap();
        assert_eq!(fs::read(&path).unwrap().len(), 8);
        assert_eq!(read_codes(&path).unwrap(), (8, vec![]));
        write_codes(&path, 2, &[vec![1, 2]]).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        assert!(read_codes(&path).is_err());
    }

    #[test]
    fn oversized_coefficients_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_codes(&dir.path().join("c.bin"), 1, &[vec![1 << 40]]).is_err());
    }
}
