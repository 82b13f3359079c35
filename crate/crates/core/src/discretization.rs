//! Crank-Nicolson / P1 discretization of the control problem.
//!
//! Step `m = 1..M` advances `Y_{m-1} → Y_m` with the control and source
//! sampled at the midpoint `t_{m-1/2}`:
//!
//! ```text
//! C₊ Y_m − C₋ Y_{m−1} − τ A U_{m−1/2} = F_m,    C± = A ± (τ/2) B
//! ```
//!
//! with the known `C₋ Y₀` folded into `F_1`. The objective uses the trapezoidal
//! rule for the state term and the midpoint rule for the control term, which
//! gives per-step weights `κ_m = 1` for `m < M` and `κ_M = 1/2`.

use alloc::vec::Vec;

use crate::blocks::BlockVec;
use crate::error::{check_dim, Error, Result};
use crate::exec::{Executor, Serial};
use crate::fem::{BoundaryCondition, FemSpace};
use crate::float;
use crate::sparse::CsrMatrix;

/// Data of a linear-quadratic parabolic control problem on the unit square.
pub trait ControlProblem {
    fn boundary_condition(&self) -> BoundaryCondition;

    /// Final time `T`.
    fn horizon(&self) -> f64;

    /// Source term `f(x, t)`.
    fn source(&self, x: f64, y: f64, t: f64) -> f64;

    /// Desired state `y_d(x, t)`.
    fn desired_state(&self, x: f64, y: f64, t: f64) -> f64;

    /// Initial state `y₀(x)`.
    fn initial_state(&self, x: f64, y: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    final_time: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                reason: "at least one time step is required",
            });
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "final_time",
                reason: "must be positive and finite",
            });
        }
        Ok(Self { final_time, steps })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    /// `t_m = m τ`, with `t_M` pinned to `T`.
    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps {
            self.final_time
        } else {
            m as f64 * self.tau()
        }
    }

    /// Midpoint `t_{m−1/2}` of step `m = 1..M`.
    pub fn midpoint(&self, m: usize) -> f64 {
        (m as f64 - 0.5) * self.tau()
    }

    /// Trapezoidal weight `κ_m` of step `m = 1..M`.
    pub fn kappa(&self, m: usize) -> f64 {
        if m == self.steps {
            0.5
        } else {
            1.0
        }
    }
}

/// Everything fixed by the discretization. Block `m − 1` of a [`BlockVec`]
/// holds time step `m`.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    space: FemSpace,
    grid: TimeGrid,
    alpha: f64,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    c_plus: CsrMatrix,
    c_minus: CsrMatrix,
    loads: BlockVec,
    desired: BlockVec,
    y0: Vec<f64>,
    d_uq: CsrMatrix,
    d_uz: CsrMatrix,
    d_yz: CsrMatrix,
    d_ym: CsrMatrix,
}

impl DiscreteSystem {
    pub fn build(
        problem: &dyn ControlProblem,
        space: FemSpace,
        grid: TimeGrid,
        alpha: f64,
    ) -> Result<Self> {
        if problem.boundary_condition() != space.boundary_condition() {
            return Err(Error::BoundaryMismatch {
                problem: problem.boundary_condition(),
                space: space.boundary_condition(),
            });
        }
        let y0 = space.interpolate(|x, y| problem.initial_state(x, y))?;
        let tau = grid.tau();
        let count = grid.steps();
        let dim = space.dof_count();

        let mut loads = BlockVec::zeros(count, dim);
        let mut desired = BlockVec::zeros(count, dim);
        for m in 1..=count {
            let tm = grid.midpoint(m);
            let f = space.load_vector(|x, y| problem.source(x, y, tm), tau)?;
            loads.block_mut(m - 1).copy_from_slice(&f);
            let t = grid.time(m);
            let d = space.load_vector(|x, y| problem.desired_state(x, y, t), 1.0)?;
            desired.block_mut(m - 1).copy_from_slice(&d);
        }
        Self::from_parts(space, grid, alpha, loads, desired, y0)
    }

    /// Builds a system from explicit load blocks `F_m` (without the `C₋Y₀`
    /// term), desired-state blocks `d_m` and initial vector `Y₀`.
    pub fn from_parts(
        space: FemSpace,
        grid: TimeGrid,
        alpha: f64,
        mut loads: BlockVec,
        desired: BlockVec,
        y0: Vec<f64>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "must be positive and finite",
            });
        }
        let dim = space.dof_count();
        check_dim(dim, y0.len())?;
        for b in [&loads, &desired] {
            check_dim(dim, b.dim())?;
            check_dim(grid.steps(), b.count())?;
        }
        let tau = grid.tau();
        let mass = space.assemble_mass();
        let stiffness = space.assemble_stiffness();
        let c_plus = mass.linear_combination(1.0, &stiffness, 0.5 * tau)?;
        let c_minus = mass.linear_combination(1.0, &stiffness, -0.5 * tau)?;
        c_minus.mul_vec_add(1.0, &y0, loads.block_mut(0));

        let mass_t = mass.transpose();
        let ata = mass_t.matmul(&mass)?;
        let btb = stiffness.transpose().matmul(&stiffness)?;
        let d_uq = mass.scaled(tau);
        let d_uz = ata.scaled(tau * tau);
        let d_yz = ata.linear_combination(2.0, &btb, 0.5 * tau * tau)?;
        let d_ym = c_plus.transpose().matmul(&c_plus)?;

        Ok(Self {
            space,
            grid,
            alpha,
            mass,
            stiffness,
            c_plus,
            c_minus,
            loads,
            desired,
            y0,
            d_uq,
            d_uz,
            d_yz,
            d_ym,
        })
    }

    pub fn space(&self) -> &FemSpace {
        &self.space
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn dim(&self) -> usize {
        self.space.dof_count()
    }

    pub fn tau(&self) -> f64 {
        self.grid.tau()
    }

    /// Mass matrix `A`.
    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Stiffness matrix `B`.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// `A + (τ/2) B`.
    pub fn c_plus(&self) -> &CsrMatrix {
        &self.c_plus
    }

    /// `A − (τ/2) B`.
    pub fn c_minus(&self) -> &CsrMatrix {
        &self.c_minus
    }

    /// Right-hand side blocks `F_m`, including `C₋Y₀` in the first block.
    pub fn loads(&self) -> &BlockVec {
        &self.loads
    }

    /// Desired-state load blocks `d_m = (φ, y_d(·, t_m))`.
    pub fn desired(&self) -> &BlockVec {
        &self.desired
    }

    /// Initial nodal vector `Y₀`.
    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    /// `τ A`.
    pub fn d_uq(&self) -> &CsrMatrix {
        &self.d_uq
    }

    /// `τ² AᵀA`.
    pub fn d_uz(&self) -> &CsrMatrix {
        &self.d_uz
    }

    /// `2AᵀA + (τ²/2) BᵀB`, equal to `C₊ᵀC₊ + C₋ᵀC₋`.
    pub fn d_yz(&self) -> &CsrMatrix {
        &self.d_yz
    }

    /// `C₊ᵀC₊`.
    pub fn d_ym(&self) -> &CsrMatrix {
        &self.d_ym
    }

    /// Gram matrix of the state block column for step `m = 1..M`.
    pub fn d_y(&self, m: usize) -> &CsrMatrix {
        if m == self.steps() {
            &self.d_ym
        } else {
            &self.d_yz
        }
    }

    pub fn kappa(&self, m: usize) -> f64 {
        self.grid.kappa(m)
    }

    fn check_trajectory(&self, b: &BlockVec) -> Result<()> {
        check_dim(self.steps(), b.count())?;
        check_dim(self.dim(), b.dim())
    }

    /// Writes `C₊Y_m − C₋Y_{m−1} − τA U_m` for block `m` (0-based), and
    /// subtracts `F_m` when `with_rhs` is set.
    pub(crate) fn constraint_block(
        &self,
        m: usize,
        y: &BlockVec,
        u: &BlockVec,
        with_rhs: bool,
        out: &mut [f64],
    ) {
        self.c_plus.mul_vec_into(y.block(m), out);
        if m > 0 {
            self.c_minus.mul_vec_add(-1.0, y.block(m - 1), out);
        }
        self.mass.mul_vec_add(-self.tau(), u.block(m), out);
        if with_rhs {
            out.iter_mut()
                .zip(self.loads.block(m))
                .for_each(|(o, f)| *o -= f);
        }
    }

    /// Applies the constraint operator (`with_rhs = false`) or evaluates the
    /// residual `𝒜Y + ℬU − ℱ` (`with_rhs = true`), block by block.
    pub(crate) fn apply_constraints(
        &self,
        y: &BlockVec,
        u: &BlockVec,
        with_rhs: bool,
        exec: &dyn Executor,
    ) -> BlockVec {
        let mut out = BlockVec::zeros(self.steps(), self.dim());
        exec.for_each_block(out.as_mut_slice(), self.dim(), &|m, blk| {
            self.constraint_block(m, y, u, with_rhs, blk)
        });
        out
    }

    /// Residual `Σ𝒜_mY_m + Σℬ_mU_{m−1/2} − ℱ`, one block per time step.
    pub fn constraint_residual(&self, y: &BlockVec, u: &BlockVec) -> Result<BlockVec> {
        self.check_trajectory(y)?;
        self.check_trajectory(u)?;
        Ok(self.apply_constraints(y, u, true, &Serial))
    }

    /// Discrete objective in vector form (without the constant `‖y_d‖²`
    /// terms).
    pub fn objective_vec(&self, y: &BlockVec, u: &BlockVec) -> Result<f64> {
        self.check_trajectory(y)?;
        self.check_trajectory(u)?;
        let tau = self.tau();
        let mut total = 0.0;
        for m in 1..=self.steps() {
            let ym = y.block(m - 1);
            let state = self.mass.quadratic_form_unchecked(ym)
                - 2.0 * float::dot(self.desired.block(m - 1), ym);
            total += 0.5 * tau * self.kappa(m) * state;
            total += 0.5 * self.alpha * tau * self.mass.quadratic_form_unchecked(u.block(m - 1));
        }
        Ok(total)
    }

    /// Discrete objective in quadrature form: trapezoidal rule in time for the
    /// state misfit (including `t₀`, where `y_h⁰` is the interpolated initial
    /// state), midpoint rule for the control, and element quadrature in space
    /// against the continuous desired state.
    pub fn objective_quadrature(
        &self,
        problem: &dyn ControlProblem,
        y: &BlockVec,
        u: &BlockVec,
    ) -> Result<f64> {
        self.check_trajectory(y)?;
        self.check_trajectory(u)?;
        let tau = self.tau();
        let space = &self.space;
        let misfit = |coeffs: &[f64], m: usize| {
            let t = self.grid.time(m);
            space.l2_error_sq(coeffs, |x, yy| problem.desired_state(x, yy, t))
        };
        let mut state = 0.5 * tau * misfit(&self.y0, 0)?;
        for m in 1..=self.steps() {
            state += self.kappa(m) * tau * misfit(y.block(m - 1), m)?;
        }
        let mut control = 0.0;
        for m in 0..self.steps() {
            control += space.l2_error_sq(u.block(m), |_, _| 0.0)?;
        }
        Ok(0.5 * state + 0.5 * self.alpha * tau * control)
    }

    /// Terms of [`Self::objective_quadrature`] that do not depend on the
    /// unknowns: `½[(τ/2)‖y_h⁰ − y_d⁰‖² + Σ_m κ_m τ ‖y_d^m‖²]`.
    pub fn objective_constant(&self, problem: &dyn ControlProblem) -> Result<f64> {
        let tau = self.tau();
        let zero = alloc::vec![0.0; self.dim()];
        let desired_sq = |m: usize| {
            let t = self.grid.time(m);
            self.space
                .l2_error_sq(&zero, |x, yy| problem.desired_state(x, yy, t))
        };
        let initial = self
            .space
            .l2_error_sq(&self.y0, |x, yy| problem.desired_state(x, yy, 0.0))?;
        let mut total = 0.5 * tau * initial;
        for m in 1..=self.steps() {
            total += self.kappa(m) * tau * desired_sq(m)?;
        }
        Ok(0.5 * total)
    }

    /// Gradient of [`Self::objective_vec`]: `(κ_mτ(AY_m − d_m), ατA U_m)`.
    pub fn objective_gradient(&self, y: &BlockVec, u: &BlockVec) -> Result<(BlockVec, BlockVec)> {
        self.check_trajectory(y)?;
        self.check_trajectory(u)?;
        let tau = self.tau();
        let mut gy = BlockVec::zeros(self.steps(), self.dim());
        let mut gu = BlockVec::zeros(self.steps(), self.dim());
        for m in 0..self.steps() {
            let w = self.kappa(m + 1) * tau;
            let out = gy.block_mut(m);
            self.mass.mul_vec_into(y.block(m), out);
            out.iter_mut()
                .zip(self.desired.block(m))
                .for_each(|(g, d)| *g = w * (*g - d));
            self.mass.mul_vec_into(u.block(m), gu.block_mut(m));
            gu.block_mut(m)
                .iter_mut()
                .for_each(|g| *g *= self.alpha * tau);
        }
        Ok((gy, gu))
    }
}
