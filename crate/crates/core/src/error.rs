use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected n={expected}, got n={found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("preset width {sigma} is under-resolved (needs at least 2h = {min})")]
    UnderResolved { sigma: f64, min: f64 },

    #[error("preset center {center:?} lies outside the inner half-box |c_i| <= {limit}")]
    CenterNearBoundary { center: [f64; 3], limit: f64 },

    #[error("preset mass truncated by the box: requested {requested}, sampled {sampled}")]
    TruncatedMass { requested: f64, sampled: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("checksum mismatch: sidecar {expected:08x}, payload {found:08x}")]
    ChecksumMismatch { expected: u32, found: u32 },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("non-finite state at t={time} (step {step}); state dumped to {dump:?}")]
    NonFinite {
        time: f64,
        step: usize,
        dump: Option<PathBuf>,
    },

    #[error("negativity breach at t={time}: min u = {min} below -{tol} (CFL failure)")]
    Negativity { time: f64, min: f64, tol: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
