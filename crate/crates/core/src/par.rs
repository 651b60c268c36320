//! Data-parallel helpers.
//!
//! With the `parallel` feature, work is spread over a rayon pool sized by the
//! configured worker count. Without it, or with a single worker, the same
//! closures run sequentially in index order. Results are always returned in
//! index order, so output never depends on scheduling.

#[cfg(feature = "parallel")]
use std::collections::HashMap;
#[cfg(feature = "parallel")]
use std::sync::{Arc, Mutex, OnceLock};

#[cfg(feature = "parallel")]
fn pool(workers: usize) -> Arc<rayon::ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    pools
        .entry(workers)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("asred-worker-{i}"))
                    .build()
                    .expect("failed to build worker pool"),
            )
        })
        .clone()
}

/// Evaluate `f(0..n)` and collect the results in index order.
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if workers > 1 && n > 1 {
            // already on a worker thread: reuse the current pool
            if rayon::current_thread_index().is_some() {
                return (0..n).into_par_iter().map(&f).collect();
            }
            return pool(workers).install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    let _ = workers;
    (0..n).map(f).collect()
}

/// Whether this build can run work concurrently at all.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_indexed(100, 1, |i| i * i);
        let par = map_indexed(100, 8, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }

    #[test]
    fn nested_calls_do_not_deadlock() {
        let out = map_indexed(4, 4, |i| map_indexed(3, 4, move |j| i + j).iter().sum::<usize>());
        assert_eq!(out, vec![3, 6, 9, 12]);
    }
}
