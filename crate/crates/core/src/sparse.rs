//! Compressed-sparse-row complex matrices.
//!
//! Used for everything that lives on a Fock basis (Hamiltonians, jump
//! operators, observables) and for superoperators on vectorized density
//! matrices. Rows are stored with strictly increasing column indices, no
//! duplicate coordinates and no stored exact zeros.

use faer::Mat;
use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseOperator {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        Self::from_triplets(
            diag.len(),
            diag.len(),
            diag.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
    }

    /// Builds a matrix from coordinates, summing duplicates and dropping
    /// entries that end up exactly zero.
    ///
    /// Panics if a coordinate is out of bounds.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            rows[r].push((c, v));
        }
        let mut builder = RowBuilder::new(nrows, ncols);
        for row in rows {
            builder.push_row(row);
        }
        builder.finish()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Square dimension; panics for rectangular matrices.
    pub fn dim(&self) -> usize {
        assert_eq!(self.nrows, self.ncols, "dim() on a rectangular operator");
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// All stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn matmul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: other.nrows,
            });
        }
        let mut builder = RowBuilder::new(self.nrows, other.ncols);
        let mut row = Vec::new();
        for r in 0..self.nrows {
            row.clear();
            for (k, a) in self.row(r) {
                row.extend(other.row(k).map(|(c, b)| (c, a * b)));
            }
            builder.push_row(std::mem::take(&mut row));
        }
        Ok(builder.finish())
    }

    pub fn adjoint(&self) -> SparseOperator {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.entries().map(|(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn transpose(&self) -> SparseOperator {
        Self::from_triplets(self.ncols, self.nrows, self.entries().map(|(r, c, v)| (c, r, v)))
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &SparseOperator, scale: Complex64) -> Result<SparseOperator> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: other.nrows,
            });
        }
        let mut builder = RowBuilder::new(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let mut row: Vec<_> = self.row(r).collect();
            row.extend(other.row(r).map(|(c, v)| (c, scale * v)));
            builder.push_row(row);
        }
        Ok(builder.finish())
    }

    pub fn scaled(&self, scale: Complex64) -> SparseOperator {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= scale);
        out.prune();
        out
    }

    /// `[self, other] = self other - other self`.
    pub fn commutator(&self, other: &SparseOperator) -> Result<SparseOperator> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.add_scaled(&ba, Complex64::new(-1.0, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SparseOperator) -> Result<f64> {
        Ok(self.add_scaled(other, Complex64::new(-1.0, 0.0))?.max_abs())
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut m = Mat::<Complex64>::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(m: &Mat<Complex64>) -> SparseOperator {
        let mut t = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    /// Keeps only rows and columns listed in `keep` (sorted), in that order.
    pub fn submatrix(&self, keep: &[usize]) -> SparseOperator {
        let mut builder = RowBuilder::new(keep.len(), keep.len());
        for &r in keep {
            let row = self
                .row(r)
                .filter_map(|(c, v)| keep.binary_search(&c).ok().map(|k| (k, v)))
                .collect();
            builder.push_row(row);
        }
        builder.finish()
    }

    fn prune(&mut self) {
        let zero = Complex64::new(0.0, 0.0);
        if self.values.iter().all(|v| *v != zero) {
            return;
        }
        let triplets: Vec<_> = self.entries().collect();
        *self = Self::from_triplets(self.nrows, self.ncols, triplets);
    }
}

/// Row-by-row CSR assembly; each pushed row may contain duplicates in any order.
pub(crate) struct RowBuilder {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl RowBuilder {
    pub(crate) fn new(nrows: usize, ncols: usize) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        Self {
            nrows,
            ncols,
            indptr,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub(crate) fn push_row(&mut self, mut row: Vec<(usize, Complex64)>) {
        row.sort_by_key(|&(c, _)| c);
        let start = self.indices.len();
        for (c, v) in row {
            if self.indices.len() > start && *self.indices.last().unwrap() == c {
                *self.values.last_mut().unwrap() += v;
            } else {
                self.indices.push(c);
                self.values.push(v);
            }
        }
        // drop exact zeros produced by cancellation
        let zero = Complex64::new(0.0, 0.0);
        let mut w = start;
        for k in start..self.indices.len() {
            if self.values[k] != zero {
                self.indices[w] = self.indices[k];
                self.values[w] = self.values[k];
                w += 1;
            }
        }
        self.indices.truncate(w);
        self.values.truncate(w);
        self.indptr.push(w);
    }

    pub(crate) fn finish(self) -> SparseOperator {
        assert_eq!(self.indptr.len(), self.nrows + 1, "row count mismatch");
        SparseOperator {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
        }
    }
}
