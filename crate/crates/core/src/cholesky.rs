//! Envelope (skyline) Cholesky factorization for sparse SPD matrices.
//!
//! Row `i` of the factor is stored densely from the first nonzero column of
//! row `i` of the input up to the diagonal. Matrices from the structured mesh
//! have an envelope of width `O(n)` in the natural lexicographic ordering, so
//! no reordering is applied and the factorization is fully deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::exec::Executor;
use crate::float;
use crate::sparse::CsrMatrix;

/// Symmetry tolerance accepted by [`Cholesky::factorize`], relative to the
/// largest stored entry.
pub const SYMMETRY_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    /// First stored column of each row.
    start: Vec<usize>,
    /// Offset of each row's first stored entry in `values`.
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl Cholesky {
    pub fn factorize(m: &CsrMatrix) -> Result<Self> {
        check_dim(m.rows(), m.cols())?;
        let scale = m
            .triplets()
            .fold(0.0f64, |s, (_, _, v)| s.max(float::abs(v)));
        m.check_symmetric(SYMMETRY_TOL * scale.max(1.0))?;

        let dim = m.rows();
        let start = m.envelope_starts();
        let mut offset = Vec::with_capacity(dim + 1);
        let mut total = 0;
        for (i, &s) in start.iter().enumerate() {
            offset.push(total);
            total += i - s + 1;
        }
        offset.push(total);
        let mut values = vec![0.0; total];

        for i in 0..dim {
            let (cols, vals) = m.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    values[offset[i] + c - start[i]] = v;
                }
            }
        }

        for i in 0..dim {
            let si = start[i];
            let row_i = offset[i];
            for j in si..i {
                let sj = start[j];
                let row_j = offset[j];
                let k0 = si.max(sj);
                let mut s = values[row_i + j - si];
                for k in k0..j {
                    s -= values[row_i + k - si] * values[row_j + k - sj];
                }
                values[row_i + j - si] = s / values[row_j + j - sj];
            }
            let mut d = values[row_i + i - si];
            for k in si..i {
                let l = values[row_i + k - si];
                d -= l * l;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: i, value: d });
            }
            values[row_i + i - si] = float::sqrt(d);
        }

        Ok(Self {
            dim,
            start,
            offset,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.values[self.offset[i] + j - self.start[i]]
    }

    /// Solves in place, overwriting `b` with `M⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.dim);
        // L y = b
        for i in 0..self.dim {
            let si = self.start[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let mut s = b[i];
            for (k, &l) in (si..i).zip(row) {
                s -= l * b[k];
            }
            b[i] = s / row[i - si];
        }
        // Lᵀ x = y, column-oriented over the stored rows.
        for i in (0..self.dim).rev() {
            let si = self.start[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let xi = b[i] / row[i - si];
            b[i] = xi;
            for (k, &l) in (si..i).zip(row) {
                b[k] -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, b.len())?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Solves every column of `rhs` (stored contiguously, column after
    /// column) in place.
    pub fn solve_multi(&self, rhs: &mut [f64], exec: &dyn Executor) -> Result<()> {
        if self.dim == 0 {
            return Ok(());
        }
        if !rhs.len().is_multiple_of(self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim * (rhs.len() / self.dim + 1),
                actual: rhs.len(),
            });
        }
        exec.for_each_block(rhs, self.dim, &|_, col| self.solve_in_place(col));
        Ok(())
    }

    /// Reconstructs `L Lᵀ` as a dense matrix.
    pub fn reconstruct_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let k0 = self.start[i].max(self.start[j]);
                let s: f64 = (k0..=j).map(|k| self.l(i, k) * self.l(j, k)).sum();
                out[i][j] = s;
                out[j][i] = s;
            }
        }
        out
    }
}
