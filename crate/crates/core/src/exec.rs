//! Execution of independent per-block tasks.
//!
//! Every task writes only its own block and reads shared immutable data, so
//! the result does not depend on how tasks are scheduled.

/// Runs `task(m, block_m)` for each block of `data` (blocks of length `dim`).
pub trait Executor: Sync {
    fn for_each_block(
        &self,
        data: &mut [f64],
        dim: usize,
        task: &(dyn Fn(usize, &mut [f64]) + Sync),
    );

    fn threads(&self) -> usize;
}

/// Runs tasks in order on the calling thread.
#[derive(Debug, Default, Clone, Copy)]
pub struct Serial;

impl Executor for Serial {
    fn for_each_block(
        &self,
        data: &mut [f64],
        dim: usize,
        task: &(dyn Fn(usize, &mut [f64]) + Sync),
    ) {
        if dim == 0 {
            return;
        }
        for (m, block) in data.chunks_exact_mut(dim).enumerate() {
            task(m, block);
        }
    }

    fn threads(&self) -> usize {
        1
    }
}

#[cfg(feature = "parallel")]
pub use self::pool::ThreadPool;

#[cfg(feature = "parallel")]
mod pool {
    use super::Executor;
    use rayon::prelude::*;

    /// A dedicated rayon pool with a fixed number of worker threads.
    #[derive(Debug)]
    pub struct ThreadPool {
        pool: rayon::ThreadPool,
        threads: usize,
    }

    impl ThreadPool {
        pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
            let threads = threads.max(1);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()?;
            Ok(Self { pool, threads })
        }
    }

    impl Executor for ThreadPool {
        fn for_each_block(
            &self,
            data: &mut [f64],
            dim: usize,
            task: &(dyn Fn(usize, &mut [f64]) + Sync),
        ) {
            if dim == 0 {
                return;
            }
            self.pool.install(|| {
                data.par_chunks_exact_mut(dim)
                    .enumerate()
                    .for_each(|(m, block)| task(m, block));
            });
        }

        fn threads(&self) -> usize {
            self.threads
        }
    }
}
