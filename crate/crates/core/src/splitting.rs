//! Augmented Lagrangian method with a full Jacobian decomposition and a
//! constant-step correction.
//!
//! The discrete problem is the separable QP
//!
//! ```text
//! min Σ_l θ_l(z_l)  s.t.  Σ_l ℳ_l z_l = ℱ,   z = (U_{1/2}, Y_1, …, U_{M−1/2}, Y_M)
//! ```
//!
//! Each iteration computes a predictor `w̃` by minimizing the augmented
//! Lagrangian over every block `z_l` separately, all blocks reading the same
//! `w^k` (so the `2M` subproblems are independent SPD solves), then updates
//! the multiplier and applies the correction
//! `w^{k+1} = w^k − ν (w^k − w̃^k)` with `ν = γ(1 − √(b/(b+1)))` for `b`
//! separable blocks.
//!
//! With state bounds an auxiliary copy `P = Y` with `y_a ≤ P ≤ y_b` is added as
//! `M` more blocks, with its own multiplier `μ`; the `P` subproblem is a
//! projection.

use alloc::vec;
use alloc::vec::Vec;

use crate::blocks::BlockVec;
use crate::cholesky::Cholesky;
use crate::discretization::DiscreteSystem;
use crate::error::{check_dim, Error, Result};
use crate::exec::Executor;
use crate::float;
use crate::sparse::CsrMatrix;
use crate::timer::Stopwatch;

/// Box constraint `lower ≤ y ≤ upper` on the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    pub lower: f64,
    pub upper: f64,
}

impl BoxBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: "lower bound must be strictly below upper bound",
            });
        }
        Ok(Self { lower, upper })
    }

    #[inline]
    pub fn project(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Penalty parameter β.
    pub beta: f64,
    /// Relaxation γ ∈ (0, 2) of the correction step.
    pub gamma: f64,
    /// Stop once `‖w^k − w^{k+1}‖²_H ≤ epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub bounds: Option<BoxBounds>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 10.0,
            gamma: 1.0,
            epsilon: 1e-12,
            max_iterations: 20_000,
            bounds: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "must be positive and finite",
            });
        }
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "must lie in (0, 2)",
            });
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: "must be non-negative",
            });
        }
        if let Some(b) = self.bounds {
            BoxBounds::new(b.lower, b.upper)?;
        }
        Ok(())
    }
}

/// Correction step size `γ(1 − √(b/(b+1)))` for `b` separable blocks.
pub fn correction_factor_for_blocks(blocks: usize, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: "must lie in (0, 2)",
        });
    }
    if blocks == 0 {
        return Err(Error::InvalidParameter {
            name: "blocks",
            reason: "at least one block is required",
        });
    }
    let b = blocks as f64;
    Ok(gamma * (1.0 - float::sqrt(b / (b + 1.0))))
}

/// Correction step size for `steps` time steps (`2·steps` blocks).
pub fn correction_factor(steps: usize, gamma: f64) -> Result<f64> {
    correction_factor_for_blocks(2 * steps, gamma)
}

/// Auxiliary state copy and its multiplier for the box-constrained variant.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPart {
    pub p: BlockVec,
    pub mu: BlockVec,
}

/// Splitting iterate `w = (U, Y, λ)`, optionally extended by `(P, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub u: BlockVec,
    pub y: BlockVec,
    pub lambda: BlockVec,
    pub aux: Option<BoxPart>,
}

impl Iterate {
    pub fn zeros(steps: usize, dim: usize, with_box: bool) -> Self {
        let z = BlockVec::zeros(steps, dim);
        Self {
            u: z.clone(),
            y: z.clone(),
            lambda: z.clone(),
            aux: with_box.then(|| BoxPart {
                p: z.clone(),
                mu: z,
            }),
        }
    }

    fn parts(&self) -> impl Iterator<Item = &BlockVec> {
        [&self.u, &self.y, &self.lambda]
            .into_iter()
            .chain(self.aux.iter().flat_map(|a| [&a.p, &a.mu]))
    }

    fn parts_mut(&mut self) -> impl Iterator<Item = &mut BlockVec> {
        [&mut self.u, &mut self.y, &mut self.lambda]
            .into_iter()
            .chain(self.aux.iter_mut().flat_map(|a| [&mut a.p, &mut a.mu]))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.aux.is_some() == other.aux.is_some()
            && self
                .parts()
                .zip(other.parts())
                .all(|(a, b)| a.same_shape(b))
    }

    /// `self − other`.
    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "iterate shapes differ");
        Self {
            u: self.u.sub(&other.u),
            y: self.y.sub(&other.y),
            lambda: self.lambda.sub(&other.lambda),
            aux: self
                .aux
                .as_ref()
                .zip(other.aux.as_ref())
                .map(|(a, b)| BoxPart {
                    p: a.p.sub(&b.p),
                    mu: a.mu.sub(&b.mu),
                }),
        }
    }

    /// Correction step `w − ν (w − w̃)`.
    pub fn corrected(&self, predictor: &Self, nu: f64) -> Self {
        assert!(self.same_shape(predictor), "iterate shapes differ");
        let mut out = self.clone();
        for (o, p) in out.parts_mut().zip(predictor.parts()) {
            o.as_mut_slice()
                .iter_mut()
                .zip(p.as_slice())
                .for_each(|(w, wt)| *w -= nu * (*w - wt));
        }
        out
    }

    /// Euclidean norm over all components.
    pub fn norm(&self) -> f64 {
        float::sqrt(self.parts().map(BlockVec::norm_sq).sum())
    }
}

/// `vᵀHv` for the weighting matrix `H` of the contraction estimate, without
/// forming `H`:
///
/// ```text
/// vᵀHv = β (Σ_l ‖ℳ_l v_l‖² + ‖Σ_l ℳ_l v_l‖²) + (1/β) ‖v_λ‖²
/// ```
///
/// In the box variant the constraint rows gain `Y − P = 0` and `v_μ` joins
/// `v_λ`.
pub fn h_norm_sq(sys: &DiscreteSystem, v: &Iterate, beta: f64, exec: &dyn Executor) -> Result<f64> {
    for part in v.parts() {
        check_dim(sys.steps(), part.count())?;
        check_dim(sys.dim(), part.dim())?;
    }
    let steps = sys.steps();
    let tau = sys.tau();
    const TERMS: usize = 3;
    let mut partial = vec![0.0; TERMS * steps];
    exec.for_each_block(&mut partial, TERMS, &|m, out| {
        let n = sys.dim();
        let mut tmp = vec![0.0; n];
        // ‖ℳ_{2m−1} vU_m‖² = ‖τ A vU_m‖²
        sys.mass().mul_vec_into(v.u.block(m), &mut tmp);
        let mut separate = tau * tau * float::norm_sq(&tmp);
        // ‖ℳ_{2m} vY_m‖² = ‖C₊ vY_m‖² + ‖C₋ vY_m‖² (the second term only when
        // a following step exists)
        sys.c_plus().mul_vec_into(v.y.block(m), &mut tmp);
        separate += float::norm_sq(&tmp);
        if m + 1 < steps {
            sys.c_minus().mul_vec_into(v.y.block(m), &mut tmp);
            separate += float::norm_sq(&tmp);
        }
        sys.constraint_block(m, &v.y, &v.u, false, &mut tmp);
        let mut combined = float::norm_sq(&tmp);
        let mut dual = float::norm_sq(v.lambda.block(m));
        if let Some(aux) = &v.aux {
            let (vy, vp) = (v.y.block(m), aux.p.block(m));
            separate += float::norm_sq(vy) + float::norm_sq(vp);
            combined += vy
                .iter()
                .zip(vp)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            dual += float::norm_sq(aux.mu.block(m));
        }
        out[0] = separate;
        out[1] = combined;
        out[2] = dual;
    });
    let (mut primal, mut dual) = (0.0, 0.0);
    for chunk in partial.chunks_exact(TERMS) {
        primal += chunk[0] + chunk[1];
        dual += chunk[2];
    }
    Ok(beta * primal + dual / beta)
}

/// Timing and convergence data of one [`SplittingSolver::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// `‖w^k − w^{k+1}‖²_H`.
    pub increment_sq: f64,
    pub seconds_predict: f64,
    pub seconds_correct: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// `‖w^k − w^{k+1}‖²_H` for `k = 1, 2, …`.
    pub increments: Vec<f64>,
    /// `‖Y^k − P^k‖` after each iteration (box variant only).
    pub box_gaps: Vec<f64>,
    /// `‖𝒜Y + ℬU − ℱ‖` at the returned iterate.
    pub constraint_residual: f64,
    pub seconds_setup: f64,
    pub seconds_predict: f64,
    pub seconds_correct: f64,
    pub seconds_total: f64,
}

/// Factorized subproblem operators for one `(system, β)` pair.
pub struct SplittingSolver<'a> {
    sys: &'a DiscreteSystem,
    config: SolverConfig,
    nu: f64,
    exec: &'a dyn Executor,
    control: Cholesky,
    interior: Option<Cholesky>,
    terminal: Cholesky,
    seconds_setup: f64,
}

impl<'a> SplittingSolver<'a> {
    pub fn new(
        sys: &'a DiscreteSystem,
        config: SolverConfig,
        exec: &'a dyn Executor,
    ) -> Result<Self> {
        config.validate()?;
        let clock = Stopwatch::start();
        let beta = config.beta;
        let tau = sys.tau();
        let steps = sys.steps();
        let blocks = if config.bounds.is_some() {
            3 * steps
        } else {
            2 * steps
        };
        let nu = correction_factor_for_blocks(blocks, config.gamma)?;

        let control = Cholesky::factorize(&sys.mass().linear_combination(
            sys.alpha() * tau,
            &sys.mass().transpose().matmul(sys.mass())?,
            beta * tau * tau,
        )?)?;

        let shift = config.bounds.map(|_| CsrMatrix::identity(sys.dim()));
        let state_matrix = |kappa: f64, gram: &CsrMatrix| -> Result<CsrMatrix> {
            let m = sys.mass().linear_combination(kappa * tau, gram, beta)?;
            match &shift {
                Some(id) => m.linear_combination(1.0, id, beta),
                None => Ok(m),
            }
        };
        let interior = if steps > 1 {
            Some(Cholesky::factorize(&state_matrix(1.0, sys.d_yz())?)?)
        } else {
            None
        };
        let terminal = Cholesky::factorize(&state_matrix(0.5, sys.d_ym())?)?;

        Ok(Self {
            sys,
            config,
            nu,
            exec,
            control,
            interior,
            terminal,
            seconds_setup: clock.seconds(),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Correction step size ν in use.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn system(&self) -> &DiscreteSystem {
        self.sys
    }

    pub fn initial_iterate(&self) -> Iterate {
        Iterate::zeros(
            self.sys.steps(),
            self.sys.dim(),
            self.config.bounds.is_some(),
        )
    }

    fn check_iterate(&self, w: &Iterate) -> Result<()> {
        if w.aux.is_some() != self.config.bounds.is_some() {
            return Err(Error::InvalidParameter {
                name: "iterate",
                reason: "box components must be present exactly when bounds are set",
            });
        }
        for part in w.parts() {
            check_dim(self.sys.steps(), part.count())?;
            check_dim(self.sys.dim(), part.dim())?;
        }
        Ok(())
    }

    /// `q = 𝒜Y + ℬU − ℱ − λ/β`, one block per step. The trailing block
    /// `q_{M+1}` is identically zero and not stored.
    pub fn compute_q(&self, w: &Iterate) -> Result<BlockVec> {
        self.check_iterate(w)?;
        Ok(self.q_unchecked(w))
    }

    fn q_unchecked(&self, w: &Iterate) -> BlockVec {
        let sys = self.sys;
        let inv_beta = 1.0 / self.config.beta;
        let mut q = BlockVec::zeros(sys.steps(), sys.dim());
        self.exec
            .for_each_block(q.as_mut_slice(), sys.dim(), &|m, out| {
                sys.constraint_block(m, &w.y, &w.u, true, out);
                out.iter_mut()
                    .zip(w.lambda.block(m))
                    .for_each(|(o, l)| *o -= inv_beta * l);
            });
        q
    }

    /// Control block `m` (0-based):
    /// `(ατA + βτ²AᵀA) Ũ_m = β(τ²AᵀA U_m + τA q_m)`.
    fn control_block(&self, m: usize, w: &Iterate, q: &BlockVec, out: &mut [f64]) {
        let sys = self.sys;
        let beta = self.config.beta;
        sys.d_uz().mul_vec_into(w.u.block(m), out);
        sys.d_uq().mul_vec_add(1.0, q.block(m), out);
        out.iter_mut().for_each(|v| *v *= beta);
        self.control.solve_in_place(out);
    }

    /// State block `m` (0-based, step `m + 1`):
    /// `(κτA + βD_y [+ βI]) Ỹ = κτd − β(C₊q_m − C₋q_{m+1}) + βD_yY_m [+ βP_m + μ_m]`.
    fn state_block(&self, m: usize, w: &Iterate, q: &BlockVec, out: &mut [f64]) {
        let sys = self.sys;
        let beta = self.config.beta;
        let step = m + 1;
        let last = step == sys.steps();
        sys.d_y(step).mul_vec_into(w.y.block(m), out);
        sys.c_plus().mul_vec_add(-1.0, q.block(m), out);
        if !last {
            sys.c_minus().mul_vec_add(1.0, q.block(m + 1), out);
        }
        if let Some(aux) = &w.aux {
            out.iter_mut()
                .zip(aux.p.block(m))
                .for_each(|(o, p)| *o += p);
        }
        let kt = sys.kappa(step) * sys.tau();
        out.iter_mut()
            .zip(sys.desired().block(m))
            .for_each(|(o, d)| *o = beta * *o + kt * d);
        if let Some(aux) = &w.aux {
            out.iter_mut()
                .zip(aux.mu.block(m))
                .for_each(|(o, mu)| *o += mu);
        }
        let factor = if last {
            &self.terminal
        } else {
            self.interior
                .as_ref()
                .expect("interior factor exists when M > 1")
        };
        factor.solve_in_place(out);
    }

    /// Predicted controls `Ũ` for all steps.
    pub fn predict_controls(&self, w: &Iterate, q: &BlockVec) -> Result<BlockVec> {
        self.check_iterate(w)?;
        let mut out = BlockVec::zeros(self.sys.steps(), self.sys.dim());
        self.exec
            .for_each_block(out.as_mut_slice(), self.sys.dim(), &|m, blk| {
                self.control_block(m, w, q, blk)
            });
        Ok(out)
    }

    /// Predicted states `Ỹ` for all steps.
    pub fn predict_states(&self, w: &Iterate, q: &BlockVec) -> Result<BlockVec> {
        self.check_iterate(w)?;
        let mut out = BlockVec::zeros(self.sys.steps(), self.sys.dim());
        self.exec
            .for_each_block(out.as_mut_slice(), self.sys.dim(), &|m, blk| {
                self.state_block(m, w, q, blk)
            });
        Ok(out)
    }

    /// Predicted multiplier `λ̃ = λ − β(𝒜Ỹ + ℬŨ − ℱ)`.
    pub fn predict_multiplier(
        &self,
        w: &Iterate,
        u_pred: &BlockVec,
        y_pred: &BlockVec,
    ) -> Result<BlockVec> {
        self.check_iterate(w)?;
        for b in [u_pred, y_pred] {
            check_dim(self.sys.steps(), b.count())?;
            check_dim(self.sys.dim(), b.dim())?;
        }
        Ok(self.multiplier_unchecked(w, u_pred, y_pred))
    }

    fn multiplier_unchecked(&self, w: &Iterate, u_pred: &BlockVec, y_pred: &BlockVec) -> BlockVec {
        let sys = self.sys;
        let beta = self.config.beta;
        let mut out = BlockVec::zeros(sys.steps(), sys.dim());
        self.exec
            .for_each_block(out.as_mut_slice(), sys.dim(), &|m, blk| {
                sys.constraint_block(m, y_pred, u_pred, true, blk);
                blk.iter_mut()
                    .zip(w.lambda.block(m))
                    .for_each(|(r, l)| *r = l - beta * *r);
            });
        out
    }

    /// Full predictor `w̃` from `w`. All blocks read the same `w` and `q`.
    pub fn predict(&self, w: &Iterate) -> Result<Iterate> {
        self.check_iterate(w)?;
        let sys = self.sys;
        let (steps, dim) = (sys.steps(), sys.dim());
        let q = self.q_unchecked(w);

        // Controls in blocks 0..M, states in blocks M..2M: one batch of 2M
        // independent solves.
        let mut batch = vec![0.0; 2 * steps * dim];
        self.exec.for_each_block(&mut batch, dim, &|k, blk| {
            if k < steps {
                self.control_block(k, w, &q, blk)
            } else {
                self.state_block(k - steps, w, &q, blk)
            }
        });
        let y_flat = batch.split_off(steps * dim);
        let u_pred = BlockVec::from_flat(dim, batch);
        let y_pred = BlockVec::from_flat(dim, y_flat);

        let aux = w.aux.as_ref().map(|aux| {
            let bounds = self.config.bounds.expect("bounds set with box iterate");
            let inv_beta = 1.0 / self.config.beta;
            let p: Vec<f64> =
                w.y.as_slice()
                    .iter()
                    .zip(aux.mu.as_slice())
                    .map(|(y, mu)| bounds.project(y - inv_beta * mu))
                    .collect();
            let beta = self.config.beta;
            let mu: Vec<f64> = aux
                .mu
                .as_slice()
                .iter()
                .zip(y_pred.as_slice().iter().zip(&p))
                .map(|(mu, (y, p))| mu - beta * (y - p))
                .collect();
            BoxPart {
                p: BlockVec::from_flat(dim, p),
                mu: BlockVec::from_flat(dim, mu),
            }
        });

        let lambda = self.multiplier_unchecked(w, &u_pred, &y_pred);
        Ok(Iterate {
            u: u_pred,
            y: y_pred,
            lambda,
            aux,
        })
    }

    /// One predictor-corrector iteration; `w` becomes `w^{k+1}`.
    pub fn step(&self, w: &mut Iterate) -> Result<StepInfo> {
        let clock = Stopwatch::start();
        let predictor = self.predict(w)?;
        let seconds_predict = clock.seconds();

        let clock = Stopwatch::start();
        let next = w.corrected(&predictor, self.nu);
        let increment_sq = h_norm_sq(self.sys, &w.sub(&next), self.config.beta, self.exec)?;
        *w = next;
        Ok(StepInfo {
            increment_sq,
            seconds_predict,
            seconds_correct: clock.seconds(),
        })
    }

    /// Iterates from the zero iterate.
    pub fn solve(&self) -> Result<(Iterate, SolveReport)> {
        self.solve_from(self.initial_iterate())
    }

    /// Iterates from `w` until `‖w^k − w^{k+1}‖²_H ≤ ε` or the iteration cap.
    pub fn solve_from(&self, mut w: Iterate) -> Result<(Iterate, SolveReport)> {
        self.check_iterate(&w)?;
        let clock = Stopwatch::start();
        let mut report = SolveReport {
            seconds_setup: self.seconds_setup,
            ..SolveReport::default()
        };
        while report.iterations < self.config.max_iterations {
            let info = self.step(&mut w)?;
            report.iterations += 1;
            report.increments.push(info.increment_sq);
            report.seconds_predict += info.seconds_predict;
            report.seconds_correct += info.seconds_correct;
            if let Some(aux) = &w.aux {
                report.box_gaps.push(w.y.sub(&aux.p).norm());
            }
            if info.increment_sq <= self.config.epsilon {
                report.converged = true;
                break;
            }
        }
        report.constraint_residual = self
            .sys
            .apply_constraints(&w.y, &w.u, true, self.exec)
            .norm();
        report.seconds_total = clock.seconds() + self.seconds_setup;
        Ok((w, report))
    }
}

/// Builds the solver and runs it from zero.
pub fn solve(
    sys: &DiscreteSystem,
    config: SolverConfig,
    exec: &dyn Executor,
) -> Result<(Iterate, SolveReport)> {
    SplittingSolver::new(sys, config, exec)?.solve()
}
