//! Contiguous storage for a sequence of equally sized vector blocks, one per
//! time slice.

use alloc::vec;
use alloc::vec::Vec;

use crate::float;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockVec {
    dim: usize,
    data: Vec<f64>,
}

impl BlockVec {
    pub fn zeros(count: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; count * dim],
        }
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Self {
        let dim = blocks.first().map_or(0, Vec::len);
        assert!(blocks.iter().all(|b| b.len() == dim), "ragged blocks");
        Self {
            dim,
            data: blocks.concat(),
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim == 0 || data.len().is_multiple_of(dim));
        Self { dim, data }
    }

    /// Number of blocks.
    pub fn count(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    /// Length of each block.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self, m: usize) -> &[f64] {
        &self.data[m * self.dim..(m + 1) * self.dim]
    }

    pub fn block_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.data[m * self.dim..(m + 1) * self.dim]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        float::norm_sq(&self.data)
    }

    pub fn norm(&self) -> f64 {
        float::sqrt(self.norm_sq())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.data.len() == other.data.len()
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert!(self.same_shape(other));
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += s * b);
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|a| *a *= s);
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_shape(other));
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| {
            if float::abs(*v) > m {
                float::abs(*v)
            } else {
                m
            }
        })
    }
}
