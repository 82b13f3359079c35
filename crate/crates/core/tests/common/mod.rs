#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use paraocp_core::{
    BlockVec, BoundaryCondition, CsrMatrix, DiscreteSystem, FemSpace, TimeGrid, TriMesh,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.rows(), m.cols());
    for (i, j, v) in m.triplets() {
        out[(i, j)] += v;
    }
    out
}

pub fn random_blocks(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> BlockVec {
    BlockVec::from_flat(
        dim,
        (0..count * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

pub struct Instance {
    pub sys: DiscreteSystem,
    /// Right-hand side `ℱ`, built here from the raw loads.
    pub rhs: DVector<f64>,
}

pub fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    steps: usize,
    bc: BoundaryCondition,
) -> Instance {
    let space = FemSpace::new(TriMesh::uniform_unit_square(n).unwrap(), bc);
    let dim = space.dof_count();
    let grid = TimeGrid::new(rng.gen_range(0.5..2.0), steps).unwrap();
    let alpha = 10f64.powf(rng.gen_range(-3.0..0.0));
    let loads = random_blocks(rng, steps, dim);
    let desired = random_blocks(rng, steps, dim);
    let y0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sys =
        DiscreteSystem::from_parts(space, grid, alpha, loads.clone(), desired, y0.clone()).unwrap();
    let mut rhs = DVector::from_column_slice(loads.as_slice());
    let c0 = dense(sys.c_minus()) * DVector::from_vec(y0);
    let mut head = rhs.rows_mut(0, dim);
    head += &c0;
    Instance { sys, rhs }
}

/// `[ℬ 𝒜]` acting on `(U, Y)` stacked as all controls, then all states.
pub fn dense_constraints(sys: &DiscreteSystem) -> DMatrix<f64> {
    let (steps, n) = (sys.steps(), sys.dim());
    let a = dense(sys.mass());
    let cp = dense(sys.c_plus());
    let cm = dense(sys.c_minus());
    let total = steps * n;
    let mut out = DMatrix::zeros(total, 2 * total);
    for m in 0..steps {
        out.view_mut((m * n, m * n), (n, n))
            .copy_from(&(-sys.tau() * &a));
        out.view_mut((m * n, total + m * n), (n, n)).copy_from(&cp);
        if m + 1 < steps {
            out.view_mut(((m + 1) * n, total + m * n), (n, n))
                .copy_from(&(-&cm));
        }
    }
    out
}

pub fn stack(u: &BlockVec, y: &BlockVec) -> DVector<f64> {
    let mut v = u.as_slice().to_vec();
    v.extend_from_slice(y.as_slice());
    DVector::from_vec(v)
}

pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}
