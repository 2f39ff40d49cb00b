use std::fmt::Write as _;

use num_traits::{Float, FromPrimitive};

use super::{DenseMatrix, Symmetry};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square compressed-sparse-row matrix with real entries.
///
/// Structural zeros are kept: an entry present in the triplet list stays in
/// the pattern even if its value is zero, so nonzero counts reflect the
/// basis-function overlap pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<R> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<R>,
    symmetry: Symmetry,
}

impl<R> SparseMatrix<R>
where
    R: Scalar<Real = R> + Float + FromPrimitive + std::fmt::LowerExp,
{
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, R)], symmetry: Symmetry) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, usize)> = Vec::with_capacity(triplets.len());
        for (k, &(i, j, _)) in triplets.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("triplet ({i}, {j}) outside {n}x{n}")));
            }
            sorted.push((i, j, k));
        }
        sorted.sort_unstable();

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<R> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, k) in &sorted {
            let v = triplets[k].2;
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
            symmetry,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, R)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(p) => self.values[range.start + p],
            Err(_) => R::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<R> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row_entries(i) {
                triplets.push((j, i, v));
            }
        }
        Self::from_triplets(self.n, &triplets, self.symmetry).expect("transpose of a valid matrix")
    }

    /// `y = A x` for real or complex `x`.
    pub fn mul_vec<S: Scalar<Real = R>>(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into<S: Scalar<Real = R>>(&self, x: &[S], y: &mut [S]) {
        assert_eq!(x.len(), self.n, "sparse matvec dimension mismatch");
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    #[inline]
    fn row_dot<S: Scalar<Real = R>>(&self, i: usize, x: &[S]) -> S {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .zip(&self.values[range])
            .fold(S::zero(), |acc, (&j, &v)| acc + x[j].mul_real(v))
    }

    /// `y = A x`, returning `Re(xᴴ y)` from the same pass.
    pub fn mul_vec_into_dot<S: Scalar<Real = R>>(&self, x: &[S], y: &mut [S]) -> R {
        assert_eq!(x.len(), self.n, "sparse matvec dimension mismatch");
        let mut dot = S::zero();
        for (i, yi) in y.iter_mut().enumerate() {
            let acc = self.row_dot(i, x);
            *yi = acc;
            dot += x[i].conj() * acc;
        }
        dot.real_part()
    }

    pub fn to_dense(&self) -> DenseMatrix<R> {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row_entries(i) {
                d[(i, j)] = v;
            }
        }
        d.with_symmetry(self.symmetry)
    }

    pub fn scaled(&self, a: R) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// Matrix Market coordinate export. Entries are written in full
    /// (`general`); the structural symmetry is recorded in a comment.
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
        let tag = match self.symmetry {
            Symmetry::Skew => "skew-symmetric",
            Symmetry::Symmetric => "symmetric",
            Symmetry::General => "general",
        };
        let _ = writeln!(out, "% structure: {tag}");
        let _ = writeln!(out, "{} {} {}", self.n, self.n, self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row_entries(i) {
                let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
            }
        }
        out
    }

    /// `max |A_ij + s A_ji|` over the pattern, with `s = −1` for symmetric and
    /// `s = +1` for skew checks.
    pub fn max_asymmetry(&self, skew: bool) -> R {
        let mut worst = R::zero();
        for i in 0..self.n {
            for (j, v) in self.row_entries(i) {
                let t = self.get(j, i);
                let d = if skew { v + t } else { v - t };
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}
