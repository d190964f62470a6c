use thiserror::Error;

use crate::lattice::LatticeIndex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no entry with tag {tag} at index ({}, {})", index.m, index.n)]
    MissingEntry { index: LatticeIndex, tag: String },
    #[error("|z| = {modulus} lies outside the accuracy domain |z| <= {limit}")]
    OutsideDomain { modulus: f64, limit: f64 },
    #[error("numerical consistency check failed: {0}")]
    Numerical(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
