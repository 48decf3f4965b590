use crate::error::{HarnessError, Result};
use rayon::prelude::*;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "SPINFIELD_WORKERS";

/// Worker count from the environment, else the available parallelism (at least 1).
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs independent jobs on a bounded pool; results keep the input order.
pub fn run_jobs<J, R, F>(jobs: &[J], f: F) -> Result<Vec<R>>
where
    J: Sync,
    R: Send,
    F: Fn(&J) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(&f).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let jobs: Vec<u64> = (0..100).collect();
        let out = run_jobs(&jobs, |j| j * j).unwrap();
        assert_eq!(out, jobs.iter().map(|j| j * j).collect::<Vec<_>>());
        assert!(worker_count() >= 1);
    }
}
