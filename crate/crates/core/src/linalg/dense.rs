use std::ops::{Index, IndexMut};

use num_traits::{Float, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Structural symmetry tag carried by assembled matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
    symmetry: Symmetry,
}

/// Rows per parallel task in matrix–vector products.
const ROW_BLOCK: usize = 64;

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
            symmetry: Symmetry::General,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m.symmetry = Symmetry::Symmetric;
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix {
            rows,
            cols,
            data,
            symmetry: Symmetry::General,
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(DenseMatrix {
            rows,
            cols,
            data,
            symmetry: Symmetry::General,
        })
    }

    pub fn from_diagonal(diag: &[S]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)]);
        t.symmetry = self.symmetry;
        t
    }

    pub fn scaled(&self, a: S) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= a);
        out
    }

    /// `self + a * other`
    pub fn add_scaled(&self, a: S, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| *x + a * *y).collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
            symmetry: Symmetry::General,
        })
    }

    pub fn max_abs(&self) -> S::Real {
        self.data.iter().map(|x| x.abs_sq()).fold(S::Real::zero(), |a, b| a.max(b)).sqrt()
    }

    pub fn frobenius_norm(&self) -> S::Real {
        crate::scalar::norm(&self.data)
    }

    /// `max|X − Xᵀ| / max|X|`.
    pub fn symmetry_error(&self) -> S::Real {
        assert!(self.is_square());
        let mut worst = S::Real::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs_sq());
            }
        }
        let scale = self.max_abs();
        if scale == S::Real::zero() {
            S::Real::zero()
        } else {
            worst.sqrt() / scale
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `y = A x`. Rows are split across threads but every row is reduced
    /// sequentially, so the result does not depend on the thread count.
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![S::zero(); self.rows];
        y.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            for (k, yi) in chunk.iter_mut().enumerate() {
                *yi = row_dot(self.row(b * ROW_BLOCK + k), x);
            }
        });
        y
    }

    /// Single-threaded `y = A x`.
    pub fn matvec_serial(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| row_dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        let n = other.cols;
        out.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (k, a) in self.row(i).iter().enumerate() {
                if *a == S::zero() {
                    continue;
                }
                for (o, b) in row.iter_mut().zip(other.row(k)) {
                    *o += *a * *b;
                }
            }
        });
        Ok(out)
    }

    /// Copies entries into a column-major `nalgebra` matrix.
    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<S>
    where
        S: nalgebra::Scalar,
    {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<S>) -> Self
    where
        S: nalgebra::Scalar,
    {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

#[inline]
fn row_dot<S: Scalar>(row: &[S], x: &[S]) -> S {
    let mut acc = S::zero();
    for (a, b) in row.iter().zip(x) {
        acc += *a * *b;
    }
    acc
}

impl<S> Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for DenseMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}
