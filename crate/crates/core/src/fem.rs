//! Linear (P1) finite elements on a [`TriMesh`].
//!
//! Integrals of data against basis functions and L² norms use the three-point
//! edge-midpoint rule on each triangle. It is exact for polynomials of degree
//! two, so mass-matrix entries, loads of affine data and errors of affine
//! functions are integrated exactly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::float;
use crate::mesh::TriMesh;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// Homogeneous Dirichlet: unknowns live on interior nodes only.
    Dirichlet,
    /// Homogeneous Neumann: interior nodes first, then boundary nodes.
    Neumann,
}

/// Barycentric coordinates of the edge midpoints, each with weight 1/3.
const EDGE_MIDPOINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: TriMesh,
    bc: BoundaryCondition,
    dof_nodes: Vec<usize>,
    node_dof: Vec<Option<usize>>,
}

impl FemSpace {
    pub fn new(mesh: TriMesh, bc: BoundaryCondition) -> Self {
        let dof_nodes = mesh.dof_nodes(bc);
        let mut node_dof = vec![None; mesh.nodes().len()];
        for (d, &node) in dof_nodes.iter().enumerate() {
            node_dof[node] = Some(d);
        }
        Self {
            mesh,
            bc,
            dof_nodes,
            node_dof,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn dof_count(&self) -> usize {
        self.dof_nodes.len()
    }

    /// Mesh node carrying each degree of freedom.
    pub fn dof_nodes(&self) -> &[usize] {
        &self.dof_nodes
    }

    pub fn node_dof(&self, node: usize) -> Option<usize> {
        self.node_dof[node]
    }

    pub fn dof_coordinates(&self, dof: usize) -> [f64; 2] {
        self.mesh.nodes()[self.dof_nodes[dof]]
    }

    fn assemble(&self, local: impl Fn(usize) -> [[f64; 3]; 3]) -> CsrMatrix {
        let mut trip = Vec::with_capacity(9 * self.mesh.elements().len());
        for (e, tri) in self.mesh.elements().iter().enumerate() {
            let k = local(e);
            for a in 0..3 {
                let Some(row) = self.node_dof[tri[a]] else {
                    continue;
                };
                for b in 0..3 {
                    if let Some(col) = self.node_dof[tri[b]] {
                        trip.push((row, col, k[a][b]));
                    }
                }
            }
        }
        let n = self.dof_count();
        CsrMatrix::from_triplets(n, n, &trip)
    }

    /// Mass matrix `A_kj = (φ_j, φ_k)`.
    pub fn assemble_mass(&self) -> CsrMatrix {
        self.assemble(|e| local_mass(self.mesh.signed_area(e)))
    }

    /// Stiffness matrix `B_kj = (∇φ_j, ∇φ_k)`.
    pub fn assemble_stiffness(&self) -> CsrMatrix {
        self.assemble(|e| local_stiffness(self.mesh.element_vertices(e)))
    }

    /// `scale · ∫ g φ_k` for every degree of freedom `k`.
    pub fn load_vector(&self, g: impl Fn(f64, f64) -> f64, scale: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dof_count()];
        for (e, tri) in self.mesh.elements().iter().enumerate() {
            let verts = self.mesh.element_vertices(e);
            let w = self.mesh.signed_area(e) / 3.0;
            for bary in &EDGE_MIDPOINTS {
                let [x, y] = map_point(&verts, bary);
                let gv = eval(&g, x, y)?;
                for a in 0..3 {
                    if let Some(d) = self.node_dof[tri[a]] {
                        out[d] += scale * w * gv * bary[a];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Nodal interpolant: `g` evaluated at each degree-of-freedom node.
    pub fn interpolate(&self, g: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
        self.dof_nodes
            .iter()
            .map(|&node| {
                let [x, y] = self.mesh.nodes()[node];
                eval(&g, x, y)
            })
            .collect()
    }

    /// `‖Σ_k c_k φ_k − g‖²_{L²(Ω)}`.
    pub fn l2_error_sq(&self, coeffs: &[f64], g: impl Fn(f64, f64) -> f64) -> Result<f64> {
        check_dim(self.dof_count(), coeffs.len())?;
        let mut total = 0.0;
        for (e, tri) in self.mesh.elements().iter().enumerate() {
            let verts = self.mesh.element_vertices(e);
            let vals = tri.map(|node| self.node_dof[node].map_or(0.0, |d| coeffs[d]));
            let w = self.mesh.signed_area(e) / 3.0;
            for bary in &EDGE_MIDPOINTS {
                let [x, y] = map_point(&verts, bary);
                let uh: f64 = (0..3).map(|a| bary[a] * vals[a]).sum();
                let diff = uh - eval(&g, x, y)?;
                total += w * diff * diff;
            }
        }
        Ok(total)
    }

    /// `‖Σ_k c_k φ_k − g‖_{L²(Ω)}`.
    pub fn l2_error(&self, coeffs: &[f64], g: impl Fn(f64, f64) -> f64) -> Result<f64> {
        self.l2_error_sq(coeffs, g).map(float::sqrt)
    }

    /// Value of the finite element function at a point, or `None` outside Ω.
    pub fn evaluate(&self, coeffs: &[f64], x: f64, y: f64) -> Option<f64> {
        let n = self.mesh.subdivisions();
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return None;
        }
        let fx = x * n as f64;
        let fy = y * n as f64;
        let i = (fx as usize).min(n - 1);
        let j = (fy as usize).min(n - 1);
        let (lx, ly) = (fx - i as f64, fy - j as f64);
        // Lower triangle (sw, se, ne) when below the diagonal.
        let e = 2 * (j * n + i) + usize::from(ly > lx);
        let tri = self.mesh.elements()[e];
        let bary = if ly > lx {
            [1.0 - ly, lx, ly - lx]
        } else {
            [1.0 - lx, lx - ly, ly]
        };
        Some(
            (0..3)
                .map(|a| bary[a] * self.node_dof[tri[a]].map_or(0.0, |d| coeffs[d]))
                .sum(),
        )
    }
}

fn eval(g: &impl Fn(f64, f64) -> f64, x: f64, y: f64) -> Result<f64> {
    let v = g(x, y);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { x, y, value: v })
    }
}

fn map_point(verts: &[[f64; 2]; 3], bary: &[f64; 3]) -> [f64; 2] {
    let x = bary[0] * verts[0][0] + bary[1] * verts[1][0] + bary[2] * verts[2][0];
    let y = bary[0] * verts[0][1] + bary[1] * verts[1][1] + bary[2] * verts[2][1];
    [x, y]
}

/// Element mass matrix `(area/12)·[[2,1,1],[1,2,1],[1,1,2]]`.
pub fn local_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Element stiffness matrix from constant basis gradients.
pub fn local_stiffness(v: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let twice_area =
        (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    // ∇φ_a = (y_b − y_c, x_c − x_b) / (2·area) for (a, b, c) cyclic.
    let grads: [[f64; 2]; 3] = core::array::from_fn(|a| {
        let b = (a + 1) % 3;
        let c = (a + 2) % 3;
        [
            (v[b][1] - v[c][1]) / twice_area,
            (v[c][0] - v[b][0]) / twice_area,
        ]
    });
    let area = 0.5 * twice_area;
    core::array::from_fn(|a| {
        core::array::from_fn(|b| area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]))
    })
}
