//! Data-parallel fan-out with a sequential fallback.
//!
//! With the `parallel` feature (the default) the helpers run on rayon's
//! global pool; without it they degrade to plain iterator loops. A runtime
//! switch ([`set_sequential`]) forces the serial path even in a parallel
//! build, which is what the benchmarks and the determinism tests use to
//! compare both executions in one process.
//!
//! Every helper collects results in input order, so reductions over floats
//! are bitwise identical for every parallelism degree.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the serial code path at runtime (parallelism degree 1).
pub fn set_sequential(sequential: bool) {
    FORCE_SEQUENTIAL.store(sequential, Ordering::SeqCst);
}

pub fn is_sequential() -> bool {
    cfg!(not(feature = "parallel")) || FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Configure the global thread pool size. Degree 1 selects the serial path;
/// anything larger sizes rayon's pool (first call wins, later calls are
/// ignored by rayon, which is fine for a CLI that configures once).
pub fn set_parallelism(degree: usize) {
    if degree == 1 {
        set_sequential(true);
        return;
    }
    set_sequential(false);
    #[cfg(feature = "parallel")]
    if degree > 1 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(degree)
            .build_global();
    }
}

/// Map `f` over `items`, preserving order.
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !is_sequential() {
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

/// Map `f` over an index range, preserving order.
pub fn par_map_range<U, F>(range: std::ops::Range<usize>, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !is_sequential() {
            return range.into_par_iter().map(f).collect();
        }
    }
    range.map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let doubled = par_map(&xs, |x| x * 2);
        assert_eq!(doubled, (0..1000).map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn sequential_switch_gives_same_results() {
        let xs: Vec<f64> = (1..500).map(|i| 1.0 / i as f64).collect();
        set_sequential(true);
        let seq = par_map(&xs, |x| x.ln());
        set_sequential(false);
        let par = par_map(&xs, |x| x.ln());
        assert_eq!(seq, par);
    }
}
