use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use paraocp::csv_io::{format_float, write_file};
use paraocp::study::{self, Mode};
use paraocp::{Example, ManufacturedProblem};
use paraocp_core::{BoxBounds, SolverConfig};

#[derive(Parser)]
#[command(
    name = "paraocp",
    version,
    about = "Parabolic optimal control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Example id: 5.1 (Dirichlet) or 5.2 (Neumann).
    #[arg(long)]
    example: Example,
    /// Regularization α (default: the example's own).
    #[arg(long)]
    alpha: Option<f64>,
    /// Penalty β (default: the example's own).
    #[arg(long)]
    beta: Option<f64>,
    /// Relaxation γ ∈ (0, 2).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Stop once ‖w^k − w^{k+1}‖²_H ≤ eps.
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 20_000)]
    kmax: usize,
    /// Worker threads for the splitting solver.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl ProblemArgs {
    fn problem(&self) -> ManufacturedProblem {
        let p = match self.alpha {
            Some(a) => ManufacturedProblem::with_alpha(self.example, a),
            None => ManufacturedProblem::new(self.example),
        };
        match self.beta {
            Some(b) => p.with_beta(b),
            None => p,
        }
    }

    fn config(&self, problem: &ManufacturedProblem) -> SolverConfig {
        SolverConfig {
            beta: problem.beta(),
            gamma: self.gamma,
            epsilon: self.eps,
            max_iterations: self.kmax,
            bounds: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study over mesh levels with τ = 1/n.
    Converge {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Subdivisions per side, ascending.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        levels: Vec<usize>,
        #[arg(long, default_value = "oracle")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-iteration H-norm history against the KKT solution.
    Iterate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fixed-iteration timing for several thread counts.
    Bench {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        n: usize,
        /// Iterations per run.
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        threads: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Splitting with the state box constraint lower ≤ y ≤ upper.
    Box {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        lower: f64,
        #[arg(long, allow_hyphen_values = true)]
        upper: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Converge {
            problem,
            levels,
            mode,
            out,
        } => {
            let p = problem.problem();
            let exec = study::executor(problem.workers)?;
            let rows =
                study::convergence_study(&p, &levels, &problem.config(&p), mode, exec.as_ref())?;
            write_file(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
            for r in &rows {
                let order =
                    |o: Option<f64>| o.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
                println!(
                    "n={:<3} dof={:<6} err_y={} err_u={} order_y={} order_u={}",
                    r.level,
                    r.dof,
                    format_float(r.err_y_final),
                    format_float(r.err_u_spacetime),
                    order(r.order_y),
                    order(r.order_u)
                );
            }
        }
        Command::Iterate { problem, n, out } => {
            let p = problem.problem();
            let sys = study::build_system(&p, n)?;
            let exec = study::executor(problem.workers)?;
            let rows =
                study::iteration_history(&sys, &problem.config(&p), problem.kmax, exec.as_ref())?;
            write_file(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
            if let Some(last) = rows.last() {
                println!(
                    "k={} hnorm_to_star={} increment_sq={}",
                    last.k,
                    last.hnorm_to_star.map_or_else(|| "-".into(), format_float),
                    format_float(last.hnorm_increment_sq)
                );
            }
        }
        Command::Bench {
            problem,
            n,
            k,
            threads,
            out,
        } => {
            let p = problem.problem();
            let sys = study::build_system(&p, n)?;
            let rows = study::benchmark(&sys, &problem.config(&p), k, &threads)?;
            write_file(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
            for r in &rows {
                println!(
                    "threads={:<2} total={:.4}s predict={:.4}s correct={:.4}s psf={:.3}",
                    r.threads, r.seconds_total, r.seconds_predict, r.seconds_correct, r.psf
                );
            }
        }
        Command::Box {
            problem,
            n,
            lower,
            upper,
            out,
        } => {
            let p = problem.problem();
            let bounds = BoxBounds::new(lower, upper)?;
            let sys = study::build_system(&p, n)?;
            let exec = study::executor(problem.workers)?;
            let run = study::box_run(&sys, &problem.config(&p), bounds, exec.as_ref())?;
            write_file(&out, &run.rows).with_context(|| format!("writing {}", out.display()))?;
            let Some(last) = run.rows.last() else {
                bail!("no iterations were run (kmax = 0)");
            };
            println!(
                "k={} converged={} box_gap={} max_state={}",
                last.k,
                run.converged,
                format_float(last.box_gap),
                format_float(
                    run.iterate
                        .y
                        .as_slice()
                        .iter()
                        .copied()
                        .fold(f64::NEG_INFINITY, f64::max)
                )
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
