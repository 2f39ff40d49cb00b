

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cumulative counters of the inner solves an operator runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InnerStats {
    /// Number of inner solves (zero right-hand sides excluded).
    pub solves: usize,
    /// Total inner iterations.
    pub iterations: usize,
}

impl InnerStats {
    pub fn since(&self, earlier: &InnerStats) -> InnerStats {
        InnerStats {
            solves: self.solves - earlier.solves,
            iterations: self.iterations - earlier.iterations,
        }
    }
}

/// Anything that can be applied to a vector.
///
/// `apply` is fallible because some operators run an inner iterative solve.
pub trait LinearOperator<S: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[S]) -> Result<Vec<S>>;

    /// Running totals of nested solves performed inside `apply`, if any.
    fn inner_stats(&self) -> Option<InnerStats> {
        None
    }

    /// Explicit matrix, column by column through [`apply`](Self::apply).
    fn to_dense(&self) -> Result<DenseMatrix<S>> {
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![S::zero(); n];
        for j in 0..n {
            e[j] = S::one();
            let col = self.apply(&e)?;
            e[j] = S::zero();
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

impl<S: Scalar> LinearOperator<S> for DenseMatrix<S> {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                got: x.len(),
            });
        }
        Ok(self.matvec(x))
    }

    fn to_dense(&self) -> Result<DenseMatrix<S>> {
        Ok(self.clone())
    }
}

/// Applies an approximate inverse `M⁻¹`.
pub trait Preconditioner<S: Scalar>: Sync {
    fn precondition(&self, r: &[S]) -> Vec<S>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl<S: Scalar> Preconditioner<S> for IdentityPreconditioner {
    fn precondition(&self, r: &[S]) -> Vec<S> {
        r.to_vec()
    }
}

/// Diagonal matrix `D`; preconditioning divides entrywise by `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPreconditioner<S> {
    diag: Vec<S>,
    inverse: Vec<S>,
}

impl<S: Scalar> DiagonalPreconditioner<S> {
    pub fn new(diag: Vec<S>) -> Result<Self> {
        let mut inverse = Vec::with_capacity(diag.len());
        for (i, d) in diag.iter().enumerate() {
            if *d == S::zero() {
                return Err(Error::ZeroDiagonal(i));
            }
            inverse.push(S::one() / *d);
        }
        Ok(DiagonalPreconditioner { diag, inverse })
    }

    pub fn diagonal(&self) -> &[S] {
        &self.diag
    }

    /// `D x`
    pub fn apply_forward(&self, x: &[S]) -> Vec<S> {
        x.iter().zip(&self.diag).map(|(a, d)| *a * *d).collect()
    }
}

impl<S: Scalar> Preconditioner<S> for DiagonalPreconditioner<S> {
    fn precondition(&self, r: &[S]) -> Vec<S> {
        r.iter().zip(&self.inverse).map(|(a, d)| *a * *d).collect()
    }
}
