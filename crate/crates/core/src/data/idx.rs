//! IDX files: big-endian magic, dimension sizes, then unsigned bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sha256_hex;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Unbinarized images, `n × rows·cols` bytes row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawImages {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
    pub provenance: String,
}

impl RawImages {
    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse("IDX header is truncated".into()))
}

fn payload(bytes: &[u8], header: usize, dims: &[u32]) -> Result<Vec<u8>> {
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or_else(|| Error::Parse("IDX dimensions overflow".into()))?;
    let body = &bytes[header..];
    if body.len() < len {
        return Err(Error::Parse(format!(
            "IDX payload is truncated: expected {len} bytes, found {}",
            body.len()
        )));
    }
    if body.len() > len {
        return Err(Error::Parse(format!(
            "IDX payload has {} trailing bytes",
            body.len() - len
        )));
    }
    Ok(body.to_vec())
}

/// Parses an in-memory IDX image file (magic `0x00000803`).
pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages> {
    let magic = read_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Parse(format!(
            "bad IDX image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let dims = [
        read_u32(bytes, 4)?,
        read_u32(bytes, 8)?,
        read_u32(bytes, 12)?,
    ];
    let pixels = payload(bytes, 16, &dims)?;
    Ok(RawImages {
        n: dims[0] as usize,
        rows: dims[1] as usize,
        cols: dims[2] as usize,
        pixels,
        provenance: format!("sha256:{}", sha256_hex(bytes)),
    })
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<RawImages> {
    parse_idx_images(&std::fs::read(path)?)
}

pub fn write_idx(path: impl AsRef<Path>, images: &RawImages) -> Result<()> {
    if images.pixels.len() != images.n * images.dim() {
        return Err(Error::Contract(
            "pixel count does not match the image shape".into(),
        ));
    }
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for d in [images.n, images.rows, images.cols] {
        let d =
            u32::try_from(d).map_err(|_| Error::Contract("IDX dimension exceeds u32".into()))?;
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads an IDX label file (magic `0x00000801`).
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    let magic = read_u32(&bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Parse(format!(
            "bad IDX label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    payload(&bytes, 8, &[read_u32(&bytes, 4)?])
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let n = u32::try_from(labels.len()).map_err(|_| Error::Contract("too many labels".into()))?;
    let mut out = LABELS_MAGIC.to_be_bytes().to_vec();
    out.extend_from_slice(&n.to_be_bytes());
    out.extend_from_slice(labels);
    std::fs::write(path, out)?;
    Ok(())
}
