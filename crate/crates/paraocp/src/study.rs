//! Convergence studies, iteration histories, thread-scaling benchmarks and
//! box-constrained runs.

use std::time::Instant;

use paraocp_core::exec::ThreadPool;
use paraocp_core::kkt::KktOptions;
use paraocp_core::splitting::h_norm_sq;
use paraocp_core::{
    solve_kkt, BlockVec, BoxBounds, ControlProblem, DiscreteSystem, Executor, FemSpace, Iterate,
    Serial, SolverConfig, SplittingSolver, TimeGrid, TriMesh,
};

use crate::norms::{error_u_spacetime, error_y_final};
use crate::problems::ManufacturedProblem;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Exact discrete optimum from the KKT system.
    Oracle,
    /// Splitting iterations until the stopping rule or the iteration cap.
    Splitting,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Mode::Oracle),
            "splitting" => Ok(Mode::Splitting),
            other => Err(format!(
                "unknown mode '{other}' (expected oracle or splitting)"
            )),
        }
    }
}

/// Number of time steps paired with `n` subdivisions: `τ = 1/n`.
pub fn steps_for(problem: &ManufacturedProblem, n: usize) -> usize {
    ((n as f64) * problem.horizon()).round().max(1.0) as usize
}

/// Discrete system for `n` subdivisions per side and `M = n·T` steps.
pub fn build_system(problem: &ManufacturedProblem, n: usize) -> Result<DiscreteSystem, Error> {
    build_system_with_steps(problem, n, steps_for(problem, n))
}

pub fn build_system_with_steps(
    problem: &ManufacturedProblem,
    n: usize,
    steps: usize,
) -> Result<DiscreteSystem, Error> {
    let space = FemSpace::new(
        TriMesh::uniform_unit_square(n)?,
        problem.boundary_condition(),
    );
    let grid = TimeGrid::new(problem.horizon(), steps)?;
    Ok(DiscreteSystem::build(
        problem,
        space,
        grid,
        problem.alpha(),
    )?)
}

/// An executor with `threads` workers; one thread runs on the caller.
pub fn executor(threads: usize) -> Result<Box<dyn Executor>, Error> {
    if threads <= 1 {
        Ok(Box::new(Serial))
    } else {
        Ok(Box::new(ThreadPool::new(threads)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub dof: usize,
    pub err_y_final: f64,
    pub err_u_spacetime: f64,
    /// `log₂` of the error ratio to the previous row.
    pub order_y: Option<f64>,
    pub order_u: Option<f64>,
}

/// Errors of the discrete optimum (or the splitting iterate) on each level,
/// with observed orders between consecutive levels.
pub fn convergence_study(
    problem: &ManufacturedProblem,
    levels: &[usize],
    config: &SolverConfig,
    mode: Mode,
    exec: &dyn Executor,
) -> Result<Vec<ConvergenceRow>, Error> {
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("levels must be strictly ascending".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for &n in levels {
        let level = |source| Error::Level { level: n, source };
        let sys = build_system(problem, n).map_err(|e| match e {
            Error::Core(c) => level(c),
            other => other,
        })?;
        let (y, u) = match mode {
            Mode::Oracle => {
                let sol = solve_kkt(&sys, &KktOptions::default()).map_err(level)?;
                (sol.y, sol.u)
            }
            Mode::Splitting => {
                let (w, _) = SplittingSolver::new(&sys, *config, exec)
                    .and_then(|s| s.solve())
                    .map_err(level)?;
                (w.y, w.u)
            }
        };
        let space = sys.space();
        let err_y_final = error_y_final(space, y.block(sys.steps() - 1), problem).map_err(level)?;
        let err_u_spacetime = error_u_spacetime(space, sys.grid(), &u, problem).map_err(level)?;
        let (order_y, order_u) = match rows.last() {
            Some(prev) => (
                Some((prev.err_y_final / err_y_final).log2()),
                Some((prev.err_u_spacetime / err_u_spacetime).log2()),
            ),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            level: n,
            h: space.mesh().h(),
            tau: sys.tau(),
            dof: space.dof_count(),
            err_y_final,
            err_u_spacetime,
            order_y,
            order_u,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub k: usize,
    /// `‖w^k − w*‖_H`; absent when the oracle is too large.
    pub hnorm_to_star: Option<f64>,
    /// `‖w^k − w^{k+1}‖²_H`.
    pub hnorm_increment_sq: f64,
}

/// Records `k = 1..=iterations` of the splitting method started from zero.
pub fn iteration_history(
    sys: &DiscreteSystem,
    config: &SolverConfig,
    iterations: usize,
    exec: &dyn Executor,
) -> Result<Vec<HistoryRow>, Error> {
    let solver = SplittingSolver::new(sys, *config, exec)?;
    let star = match solve_kkt(sys, &KktOptions::default()) {
        Ok(sol) => Some(sol.to_iterate()),
        Err(paraocp_core::Error::KktTooLarge { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let mut w = solver.initial_iterate();
    let mut rows = Vec::with_capacity(iterations);
    for k in 1..=iterations {
        let hnorm_to_star = match &star {
            Some(s) => Some(h_norm_sq(sys, &w.sub(s), config.beta, exec)?.sqrt()),
            None => None,
        };
        let info = solver.step(&mut w)?;
        rows.push(HistoryRow {
            k,
            hnorm_to_star,
            hnorm_increment_sq: info.increment_sq,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub threads: usize,
    pub seconds_total: f64,
    pub seconds_predict: f64,
    pub seconds_correct: f64,
    /// `T_serial / T_parallel`.
    pub psf: f64,
}

struct Timed {
    iterate: Iterate,
    total: f64,
    predict: f64,
    correct: f64,
}

fn run_fixed(
    sys: &DiscreteSystem,
    config: &SolverConfig,
    iterations: usize,
    exec: &dyn Executor,
) -> Result<Timed, Error> {
    let solver = SplittingSolver::new(sys, *config, exec)?;
    let mut w = solver.initial_iterate();
    let (mut predict, mut correct) = (0.0, 0.0);
    let clock = Instant::now();
    for _ in 0..iterations {
        let info = solver.step(&mut w)?;
        predict += info.seconds_predict;
        correct += info.seconds_correct;
    }
    Ok(Timed {
        iterate: w,
        total: clock.elapsed().as_secs_f64(),
        predict,
        correct,
    })
}

/// Equality of every stored `f64` bit pattern.
pub fn bitwise_equal(a: &Iterate, b: &Iterate) -> bool {
    fn parts(w: &Iterate) -> Vec<&BlockVec> {
        let mut v = vec![&w.u, &w.y, &w.lambda];
        if let Some(aux) = &w.aux {
            v.extend([&aux.p, &aux.mu]);
        }
        v
    }
    let (pa, pb) = (parts(a), parts(b));
    pa.len() == pb.len()
        && pa.iter().zip(&pb).all(|(x, y)| {
            x.dim() == y.dim()
                && x.as_slice().len() == y.as_slice().len()
                && x.as_slice()
                    .iter()
                    .zip(y.as_slice())
                    .all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

/// Times exactly `iterations` steps (no stopping rule) for each thread count
/// and checks that every run produces the serial iterate bit for bit.
pub fn benchmark(
    sys: &DiscreteSystem,
    config: &SolverConfig,
    iterations: usize,
    thread_counts: &[usize],
) -> Result<Vec<BenchRow>, Error> {
    if thread_counts.contains(&0) {
        return Err(Error::Usage("thread counts must be positive".into()));
    }
    let serial = run_fixed(sys, config, iterations, &Serial)?;
    let mut rows = Vec::with_capacity(thread_counts.len());
    for &threads in thread_counts {
        let run = if threads == 1 {
            None
        } else {
            let pool = ThreadPool::new(threads)?;
            let run = run_fixed(sys, config, iterations, &pool)?;
            if !bitwise_equal(&run.iterate, &serial.iterate) {
                return Err(Error::Nondeterministic { threads });
            }
            Some(run)
        };
        let r = run.as_ref().unwrap_or(&serial);
        rows.push(BenchRow {
            threads,
            seconds_total: r.total,
            seconds_predict: r.predict,
            seconds_correct: r.correct,
            psf: serial.total / r.total,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRow {
    pub k: usize,
    pub hnorm_increment_sq: f64,
    /// `‖Y − P‖` after the step.
    pub box_gap: f64,
    pub state_norm: f64,
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone)]
pub struct BoxRun {
    pub rows: Vec<BoxRow>,
    pub iterate: Iterate,
    pub converged: bool,
}

/// Box-constrained splitting from zero, recording bound feasibility of the
/// auxiliary copy after every iteration.
pub fn box_run(
    sys: &DiscreteSystem,
    config: &SolverConfig,
    bounds: BoxBounds,
    exec: &dyn Executor,
) -> Result<BoxRun, Error> {
    let config = SolverConfig {
        bounds: Some(bounds),
        ..*config
    };
    let solver = SplittingSolver::new(sys, config, exec)?;
    let mut w = solver.initial_iterate();
    let mut rows = Vec::new();
    let mut converged = false;
    for k in 1..=config.max_iterations {
        let info = solver.step(&mut w)?;
        let aux = w.aux.as_ref().expect("box iterate carries P and μ");
        let p = aux.p.as_slice();
        rows.push(BoxRow {
            k,
            hnorm_increment_sq: info.increment_sq,
            box_gap: w.y.sub(&aux.p).norm(),
            state_norm: w.y.norm(),
            p_min: p.iter().copied().fold(f64::INFINITY, f64::min),
            p_max: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        if info.increment_sq <= config.epsilon {
            converged = true;
            break;
        }
    }
    Ok(BoxRun {
        rows,
        iterate: w,
        converged,
    })
}
