//! Experiments on top of `paraocp-core`: manufactured problems with known
//! optimal solutions, error norms, convergence studies, iteration histories,
//! thread-scaling benchmarks and their CSV files.

pub mod csv_io;
pub mod norms;
pub mod problems;
pub mod study;

pub use problems::{Example, ManufacturedProblem};
pub use study::{BenchRow, BoxRow, ConvergenceRow, HistoryRow, Mode};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] paraocp_core::Error),
    #[error("level n={level}: {source}")]
    Level {
        level: usize,
        source: paraocp_core::Error,
    },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("run with {threads} threads differs from the serial iterate")]
    Nondeterministic { threads: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv: unexpected header {found:?}, expected {expected:?}")]
    Header { expected: String, found: String },
    #[error("csv line {line}: cannot parse {value:?} in column {column}")]
    Parse {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("{0}")]
    Usage(String),
}
