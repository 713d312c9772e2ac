//! Execution strategy for batches of independent jobs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch of independent jobs is executed. Results always come back in
/// input order, so the choice never changes the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon work stealing, optionally on a dedicated pool of `jobs` threads.
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
    ParallelWith {
        jobs: usize,
    },
}

impl Execution {
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Execution::Sequential,
            Some(n) if n > 1 => Execution::ParallelWith { jobs: n },
            _ => Execution::Parallel,
        }
    }

    pub fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match *self {
            Execution::Sequential => items.into_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.into_par_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::ParallelWith { jobs } => {
                match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                    Ok(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
                    Err(_) => items.into_par_iter().map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => items.into_iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_strategy_preserves_order() {
        let items: Vec<u64> = (0..500).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x + 1).collect();
        for exec in [
            Execution::Sequential,
            Execution::Parallel,
            Execution::ParallelWith { jobs: 3 },
        ] {
            assert_eq!(exec.map(items.clone(), |x| x * x + 1), expected);
        }
    }

    #[test]
    fn jobs_flag_mapping() {
        assert_eq!(Execution::from_jobs(None), Execution::Parallel);
        assert_eq!(Execution::from_jobs(Some(1)), Execution::Sequential);
        assert_eq!(
            Execution::from_jobs(Some(4)),
            Execution::ParallelWith { jobs: 4 }
        );
    }
}
