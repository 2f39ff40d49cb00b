use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("OFF parse error at line {line}: {message}")]
    OffParse { line: usize, message: String },

    #[error("edge ({0}, {1}) is shared by {2} triangles; a closed 2-manifold needs exactly 2")]
    NonManifoldEdge(usize, usize, usize),

    #[error("surface is not orientable: conflicting winding at triangle {0}")]
    NonOrientable(usize),

    #[error("degenerate triangle {0} (zero area)")]
    DegenerateTriangle(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("conjugate gradients did not reach {tol:e} in {iterations} iterations (achieved {achieved:e})")]
    InnerSolveFailed {
        tol: f64,
        achieved: f64,
        iterations: usize,
    },

    #[error("matrix is not positive definite (curvature {curvature:e} at iteration {iteration})")]
    NotPositiveDefinite { curvature: f64, iteration: usize },

    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),

    #[error("matrix is singular to machine precision")]
    Singular,

    #[error("matrix cache format error: {0}")]
    CacheFormat(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
