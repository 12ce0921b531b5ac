//! Replica runner: fans a seed list out to a worker pool and returns the
//! results in seed-list order, whatever order the workers finish in.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default worker count: the available hardware threads.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Applies `f` to every seed on `jobs` workers (hardware threads when `None`).
/// The first error in seed order is returned.
pub fn map_seeds<T, F>(seeds: &[u64], jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let jobs = jobs.unwrap_or_else(default_jobs).max(1);
    let run = || seeds.par_iter().map(|&s| f(s)).collect::<Vec<_>>();
    let results = if jobs == 1 {
        seeds.iter().map(|&s| f(s)).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?
            .install(run)
    };
    results.into_iter().collect()
}

/// Seeds `first, first + 1, ..., first + count - 1`.
pub fn seed_range(first: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| first.wrapping_add(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_seed_order() {
        let seeds = seed_range(10, 50);
        for jobs in [1, 3] {
            let out = map_seeds(&seeds, Some(jobs), |s| Ok(s * 2)).unwrap();
            assert_eq!(out, seeds.iter().map(|s| s * 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_wins() {
        let seeds = seed_range(0, 10);
        let err = map_seeds(&seeds, Some(2), |s| {
            if s >= 4 {
                Err(Error::Budget(format!("{s}")))
            } else {
                Ok(s)
            }
        })
        .unwrap_err();
        assert_eq!(err.to_string(), "computation budget exceeded: 4");
    }
}
