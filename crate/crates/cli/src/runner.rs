//! Parallel experiment execution.
//!
//! Every row is a pure function of `(config, point, replication)`, so
//! fanning rows out over a pool and collecting them in index order gives
//! the same table as [`labelshift::experiment::run_experiment`] for any
//! thread count.

use labelshift::experiment::{experiment_row, ExperimentConfig, ResultRow};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// `threads = 0` lets the pool pick one thread per core.
pub fn run_parallel(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let points = cfg.sweep_points().len();
    let reps = cfg.replications;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        (0..points * reps)
            .into_par_iter()
            .map(|i| experiment_row(cfg, i / reps, i % reps))
            .collect::<labelshift::Result<Vec<_>>>()
    })?;
    Ok(rows)
}
