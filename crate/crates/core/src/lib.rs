//! Discretize-then-optimize toolkit for linear-quadratic parabolic optimal
//! control on the unit square.
//!
//! The pipeline is:
//!
//! 1. [`mesh`] builds a structured triangulation and classifies nodes.
//! 2. [`fem`] assembles P1 mass/stiffness matrices, load vectors and L² norms.
//! 3. [`discretization`] stacks Crank-Nicolson time steps into a separable
//!    equality-constrained quadratic program.
//! 4. [`splitting`] solves that program with the augmented Lagrangian method
//!    using a full Jacobian decomposition followed by a constant-step
//!    correction; every per-time-slice subproblem is an independent SPD solve.
//! 5. [`kkt`] solves the same program directly and serves as the reference.
//!
//! The crate is `no_std` (with `alloc`). The `std` feature adds wall-clock
//! phase timing; `parallel` adds a rayon-backed [`exec::Executor`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod blocks;
pub mod cholesky;
pub mod discretization;
pub mod error;
pub mod exec;
pub mod fem;
pub mod kkt;
pub mod mesh;
pub mod sparse;
pub mod splitting;

mod float;
mod timer;

pub use blocks::BlockVec;
pub use cholesky::Cholesky;
pub use discretization::{ControlProblem, DiscreteSystem, TimeGrid};
pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use fem::{BoundaryCondition, FemSpace};
pub use kkt::{solve_kkt, KktOptions, KktSolution};
pub use mesh::TriMesh;
pub use sparse::CsrMatrix;
pub use splitting::{BoxBounds, Iterate, SolveReport, SolverConfig, SplittingSolver};
