//! Dense and compressed-sparse matrices and the abstract linear operator
//! contract used by the Krylov solvers.

mod dense;
mod operator;
mod sparse;

pub use dense::{DenseMatrix, Symmetry};
pub use operator::{DiagonalPreconditioner, IdentityPreconditioner, InnerStats, LinearOperator, Preconditioner};
pub use sparse::SparseMatrix;
