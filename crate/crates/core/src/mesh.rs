//! Structured triangulations of the unit square.
//!
//! Nodes are numbered lexicographically with `x` running fastest, so node
//! `(i, j)` (column `i`, row `j`) has index `j * (n + 1) + i`. Every grid cell
//! is split along the same diagonal, from its lower-left to its upper-right
//! corner.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float;

/// Distance from the boundary below which a node counts as a boundary node.
pub const BOUNDARY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    interior_nodes: Vec<usize>,
    h: f64,
    subdivisions: usize,
}

impl TriMesh {
    /// Uniform mesh with `n` cells per side: `(n+1)²` nodes, `2n²` triangles.
    pub fn uniform_unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSubdivision(n));
        }
        let side = n + 1;
        let step = 1.0 / n as f64;
        let mut nodes = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                // Pin the last coordinate to exactly 1.0.
                let x = if i == n { 1.0 } else { i as f64 * step };
                let y = if j == n { 1.0 } else { j as f64 * step };
                nodes.push([x, y]);
            }
        }

        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let sw = j * side + i;
                let se = sw + 1;
                let nw = sw + side;
                let ne = nw + 1;
                elements.push([sw, se, ne]);
                elements.push([sw, ne, nw]);
            }
        }

        let (boundary_nodes, interior_nodes): (Vec<usize>, Vec<usize>) =
            (0..nodes.len()).partition(|&k| on_boundary(nodes[k]));

        Ok(Self {
            nodes,
            elements,
            boundary_nodes,
            interior_nodes,
            h: float::sqrt(2.0) * step,
            subdivisions: n,
        })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    /// Boundary node indices in ascending order.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Interior node indices in ascending order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Grid spacing `1/n`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.subdivisions as f64
    }

    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn element_vertices(&self, e: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area of element `e`; positive for counterclockwise vertices.
    pub fn signed_area(&self, e: usize) -> f64 {
        let [p0, p1, p2] = self.element_vertices(e);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// Degrees of freedom for a boundary mode: interior nodes only for
    /// Dirichlet, interior nodes followed by boundary nodes for Neumann.
    pub fn dof_nodes(&self, bc: crate::fem::BoundaryCondition) -> Vec<usize> {
        use crate::fem::BoundaryCondition::*;
        match bc {
            Dirichlet => self.interior_nodes.clone(),
            Neumann => self
                .interior_nodes
                .iter()
                .chain(&self.boundary_nodes)
                .copied()
                .collect(),
        }
    }
}

fn on_boundary(p: [f64; 2]) -> bool {
    p.iter()
        .any(|&c| float::abs(c) < BOUNDARY_TOL || float::abs(c - 1.0) < BOUNDARY_TOL)
}
