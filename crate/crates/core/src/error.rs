use thiserror::Error;

use crate::algebra::PsdReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds {limit:.3e}")]
    NotHermitian { asymmetry: f64, limit: f64 },

    #[error("map is not completely positive: min Choi eigenvalue {:.6e}", .0.min_eigenvalue)]
    NotCompletelyPositive(PsdReport),

    #[error("{what} = {value} is out of range ({bound})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        bound: String,
    },

    #[error("realization violates {identity}: deviation {deviation:.3e}")]
    Realization { identity: String, deviation: f64 },

    #[error("Fock depth {depth} is too small for this word; need depth >= {required}")]
    DepthTooSmall { depth: usize, required: usize },

    #[error("no witness exists: eta - id is completely positive (min Choi eigenvalue {min_eigenvalue:.6e})")]
    NoWitness { min_eigenvalue: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
