//! Periodic grids, transforms, spectral differential operators, vertical
//! averaging, Helmholtz projections and Littlewood–Paley calculus.

mod field;
mod grid;
pub mod io;
pub mod lp;
pub mod ops;

pub use field::{Field, Parity, Spectrum, VELOCITY_PARITY};
pub use grid::{Grid, GridSpec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("rank mismatch: {op} expects {expected}, got rank {got}")]
    RankMismatch { op: &'static str, expected: &'static str, got: usize },
    #[error("field is not vertically mean-free (relative k3 = 0 content {0:.3e})")]
    NotMeanFree(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
