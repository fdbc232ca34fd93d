use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("enumeration budget exceeded: more than {budget} lattice points")]
    Budget { budget: usize },

    #[error("lattice point with squared norm {norm_sq} is outside the modeled support (max {max_norm_sq})")]
    OutOfSupport { norm_sq: u64, max_norm_sq: u64 },

    #[error("unknown lattice `{0}` (expected one of Z, Z2, A2, E8)")]
    UnknownLattice(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
