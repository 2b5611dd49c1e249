//! Execution strategy for the per-user loops. With the `parallel` feature the
//! work fans out over rayon; without it, or inside [`sequential`], it runs on
//! the calling thread. Results are ordered by index either way, so outputs do
//! not depend on the strategy.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

struct Reset(bool);

impl Drop for Reset {
    fn drop(&mut self) {
        FORCE_SEQUENTIAL.with(|flag| flag.set(self.0));
    }
}

/// Runs `f` with data-parallel execution disabled on the current thread.
/// Useful for measuring the sequential baseline from a build that has the
/// `parallel` feature on.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let _reset = FORCE_SEQUENTIAL.with(|flag| Reset(flag.replace(true)));
    f()
}

#[cfg(any(feature = "parallel", test))]
fn forced_sequential() -> bool {
    FORCE_SEQUENTIAL.with(|flag| flag.get())
}

/// Maps `f` over `0..n`, collecting results in index order.
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if !forced_sequential() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().with_min_len(16).map(f).collect();
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_preserves_order() {
        let out = map_indexed(1000, |i| i * 2);
        assert_eq!(out, (0..1000).map(|i| i * 2).collect::<Vec<_>>());
    }

    #[test]
    fn sequential_restores_flag() {
        let inner = sequential(|| {
            assert!(forced_sequential());
            map_indexed(10, |i| i)
        });
        assert!(!forced_sequential());
        assert_eq!(inner.len(), 10);
    }
}
