//! Compressed sparse row matrices.
//!
//! Only what the discretization needs: assembly from triplets, products,
//! linear combinations and symmetric checks. Column indices within a row are
//! kept sorted and unique.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::float;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; rows + 1];
        for &(r, c, _) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of range");
            counts[r + 1] += 1;
        }
        for r in 0..rows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut cols_tmp = vec![0usize; triplets.len()];
        let mut vals_tmp = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols_tmp[next[r]] = c;
            vals_tmp[next[r]] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..rows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            // Stable sort keeps summation order equal to insertion order.
            order.sort_by_key(|&k| cols_tmp[k]);
            for &k in &order {
                let c = cols_tmp[k];
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += vals_tmp[k];
                } else {
                    col_idx.push(c);
                    values.push(vals_tmp[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let trip: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        Self::from_triplets(n, m, &trip)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *o = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `out += scale * self * x`.
    pub fn mul_vec_add(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let s: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
            *o += scale * s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, x.len())?;
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        Ok(out)
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.cols, v.len())?;
        check_dim(self.rows, v.len())?;
        Ok(self.quadratic_form_unchecked(v))
    }

    pub(crate) fn quadratic_form_unchecked(&self, v: &[f64]) -> f64 {
        (0..self.rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                v[r] * cols.iter().zip(vals).map(|(&c, &x)| x * v[c]).sum::<f64>()
            })
            .sum()
    }

    pub fn transpose(&self) -> Self {
        let trip: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, &trip)
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &CsrMatrix) -> Result<Self> {
        check_dim(self.cols, rhs.rows)?;
        let mut acc = vec![0.0; rhs.cols];
        let mut used = vec![false; rhs.cols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (rc, rv) = rhs.row(k);
                for (&c, &b) in rc.iter().zip(rv) {
                    if !used[c] {
                        used[c] = true;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                col_idx.push(c);
                values.push(acc[c]);
                acc[c] = 0.0;
                used[c] = false;
            }
            pattern.clear();
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows: self.rows,
            cols: rhs.cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `a * self + b * other` on the union of sparsity patterns.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<Self> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let trip: Vec<_> = self
            .triplets()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.triplets().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        Ok(Self::from_triplets(self.rows, self.cols, &trip))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Principal submatrix on the given (sorted or unsorted) index list.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.rows.max(self.cols)];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let trip: Vec<_> = idx
            .iter()
            .enumerate()
            .flat_map(|(k, &i)| {
                let (cols, vals) = self.row(i);
                let pos = &pos;
                cols.iter()
                    .zip(vals)
                    .filter(move |(&c, _)| pos[c] != usize::MAX)
                    .map(move |(&c, &v)| (k, pos[c], v))
            })
            .collect();
        Self::from_triplets(idx.len(), idx.len(), &trip)
    }

    /// Checks `|M_ij - M_ji| <= tol` for every stored entry.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        check_dim(self.rows, self.cols)?;
        for (r, c, v) in self.triplets() {
            if float::abs(v - self.get(c, r)) > tol {
                return Err(Error::NotSymmetric { row: r, col: c });
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }

    /// Frobenius norm of the stored entries.
    pub fn frobenius_norm(&self) -> f64 {
        float::sqrt(float::norm_sq(&self.values))
    }

    /// For each row, the smallest column index stored in or left of the
    /// diagonal (the row's envelope start).
    pub(crate) fn envelope_starts(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| {
                let (cols, _) = self.row(r);
                cols.first().map_or(r, |&c| c.min(r))
            })
            .collect()
    }
}
