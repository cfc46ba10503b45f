//! Block-parallel experiment driver.
//!
//! Blocks are the unit of parallelism: block `k` always runs on its own rng
//! stream keyed by `(master_seed, k)`, so workers claiming indices from a
//! shared counter compute exactly the blocks the sequential driver would.
//! Results are re-ordered by index before aggregation, which makes the
//! output bit-identical to a single-threaded run, whatever the thread count.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::thread;

use idnc_core::sim::{aggregate_blocks, run_block_indexed, run_experiment};
use idnc_core::sim::{AggregateMetrics, BlockMetrics, ExperimentConfig};
use idnc_core::{Error, Result};

/// Runs the experiment on `jobs` worker threads (sequentially for
/// `jobs <= 1`).  On failure the error of the lowest block index is
/// reported, exactly as the sequential driver would have stopped.
pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<AggregateMetrics> {
    if jobs <= 1 {
        return run_experiment(cfg);
    }
    cfg.validate()?;
    let n = cfg.n_blocks;
    let workers = jobs.min(n);
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let mut results: Vec<(usize, Result<BlockMetrics>)> = Vec::with_capacity(n);
    thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            handles.push(scope.spawn(|| {
                let mut local = Vec::new();
                // The counter hands indices out in increasing order and a
                // claimed block always runs to completion, so every index
                // below a failed one has a recorded result somewhere.
                loop {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= n {
                        break;
                    }
                    let outcome = run_block_indexed(cfg, k as u64);
                    let failed = outcome.is_err();
                    local.push((k, outcome));
                    if failed {
                        stop.store(true, Ordering::Relaxed);
                        break;
                    }
                }
                local
            }));
        }
        for handle in handles {
            results.extend(handle.join().expect("simulation worker panicked"));
        }
    });
    results.sort_by_key(|(k, _)| *k);
    let mut blocks = Vec::with_capacity(n);
    for (k, outcome) in results {
        match outcome {
            Ok(metrics) => blocks.push(metrics),
            Err(cause) => {
                return Err(Error::InBlock { block: k as u64, cause: Box::new(cause) })
            }
        }
    }
    assert_eq!(blocks.len(), n, "every block index was claimed and completed");
    aggregate_blocks(&blocks)
}
