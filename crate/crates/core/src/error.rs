//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mesh is not conforming: {0}")]
    NonConforming(String),

    #[error("coarse cell {cell} has no interior fine node to pair (anchor at ({x:.6}, {y:.6}))")]
    PairingFailure { cell: usize, x: f64, y: f64 },

    #[error("unsupported polynomial degree {0} (only 1 and 2 are available)")]
    UnsupportedDegree(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("incompatible velocity space: {0}")]
    IncompatibleSpace(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("solver did not reach tolerance: relative residual {residual:.3e} > {tol:.3e}")]
    SolverTolerance { residual: f64, tol: f64 },

    #[error("velocity-pressure pairing is not inf-sup stable: velocity {vel}, pressure {pres}")]
    NotInfSup { vel: String, pres: String },

    #[error("discrete incompressibility violated: max |(div u, q)| = {divergence:.3e} > {tol:.3e}")]
    Incompressibility { divergence: f64, tol: f64 },

    #[error("archive error: {0}")]
    Archive(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
