//! Runs independent jobs on a bounded worker pool.

use std::sync::mpsc;

use crate::error::{BenchError, Result};

/// Applies `f` to every job on `workers` threads and returns the results in
/// job order. Jobs share nothing; results travel back over a channel and the
/// first error (by job index) wins.
pub fn run_jobs<J, R, F>(jobs: &[J], workers: usize, f: F) -> Result<Vec<R>>
where
    J: Sync,
    R: Send,
    F: Fn(&J) -> Result<R> + Sync,
{
    if workers == 0 {
        return Err(BenchError::Usage("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Invariant(format!("cannot start worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel();
    pool.scope(|s| {
        for (i, job) in jobs.iter().enumerate() {
            let tx = tx.clone();
            let f = &f;
            s.spawn(move |_| {
                let _ = tx.send((i, f(job)));
            });
        }
    });
    drop(tx);
    let mut slots: Vec<Option<Result<R>>> = (0..jobs.len()).map(|_| None).collect();
    for (i, r) in rx {
        slots[i] = Some(r);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.unwrap_or_else(|| Err(BenchError::Invariant(format!("job {i} reported no result")))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_job_order() {
        let jobs: Vec<u64> = (0..20).collect();
        for workers in [1, 3] {
            let out = run_jobs(&jobs, workers, |&j| Ok(j * j)).unwrap();
            assert_eq!(out, jobs.iter().map(|j| j * j).collect::<Vec<_>>());
        }
        let err = run_jobs(&jobs, 2, |&j| if j == 7 { Err(BenchError::Usage("seven".into())) } else { Ok(j) });
        assert!(matches!(err, Err(BenchError::Usage(m)) if m == "seven"));
        assert!(run_jobs(&jobs, 0, |&j| Ok(j)).is_err());
    }
}
