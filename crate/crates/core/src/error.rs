use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix market {path:?}: {msg}")]
    MatrixMarket { path: PathBuf, msg: String },

    #[error("matrix market {path:?}, line {line}: {msg}")]
    MatrixMarketLine {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("vector is zero")]
    ZeroVector,

    #[error("x^T B x = {0:e} is not positive; B is not positive definite")]
    NotPositiveDefinite(f64),

    #[error("projected B not SPD (pivot {index} = {value:e})")]
    ProjectedNotSpd { index: usize, value: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("requested {requested} eigenpairs from a problem of dimension {dim}")]
    TooManyEigenpairs { requested: usize, dim: usize },

    #[error("all subspace candidates are degenerate")]
    DegenerateCandidates,

    #[error("protected candidate {0} is numerically dependent on earlier columns")]
    ProtectedCandidateDropped(usize),

    #[error("basis rank {rank} is smaller than block size {block}")]
    BasisRankTooSmall { rank: usize, block: usize },

    #[error("previous gradient norm is zero; adaptive momentum is undefined")]
    ZeroGradientHistory,

    #[error("dense oracle limited to n <= {limit}, got n = {n}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
