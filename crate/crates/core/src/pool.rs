//! Minimal deterministic worker pool: `n_shards` closures evaluated by up
//! to `workers` threads, results returned in shard order regardless of
//! scheduling. Reductions stay schedule-independent because callers always
//! merge the returned vector sequentially.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub(crate) fn run_indexed<T, F>(n_shards: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.max(1).min(n_shards.max(1));
    if workers <= 1 || n_shards <= 1 {
        return (0..n_shards).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, T)>> = Mutex::new(Vec::with_capacity(n_shards));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_shards {
                    break;
                }
                let out = f(i);
                results.lock().unwrap().push((i, out));
            });
        }
    });
    let mut collected = results.into_inner().unwrap();
    collected.sort_by_key(|(i, _)| *i);
    collected.into_iter().map(|(_, t)| t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_and_covers_all_shards() {
        for workers in [1, 2, 7] {
            let out = run_indexed(23, workers, |i| i * i);
            assert_eq!(out, (0..23).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
