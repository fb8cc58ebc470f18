//! Deterministic batch execution.
//!
//! `map_indexed` evaluates an indexed job list and returns the results in
//! index order, so parallel and sequential schedules produce identical
//! output streams byte for byte. With the `parallel` feature the work is
//! spread over the current rayon pool unless the serial override is set;
//! the harness flips the override from `NOISY_STM_THREADS=0`.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SERIAL: AtomicBool = AtomicBool::new(false);

/// Forces sequential execution even when the `parallel` feature is compiled in.
pub fn set_force_serial(serial: bool) {
    FORCE_SERIAL.store(serial, Ordering::SeqCst);
}

pub fn force_serial() -> bool {
    FORCE_SERIAL.load(Ordering::SeqCst)
}

/// True when calls to [`map_indexed`] will actually fan out.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && !force_serial()
}

/// Caps the worker count of the shared pool. Effective only before the pool
/// first runs; later calls (or a serial build) leave the pool untouched.
/// `0` and `1` are handled by [`set_force_serial`] upstream, not here.
#[cfg(feature = "parallel")]
pub fn cap_threads(workers: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn cap_threads(_workers: usize) {}

pub fn map_indexed<T, F>(jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if !force_serial() {
            use rayon::prelude::*;
            return (0..jobs).into_par_iter().map(&f).collect();
        }
    }
    (0..jobs).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        let out = map_indexed(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn serial_override_matches_parallel() {
        let par = map_indexed(64, |i| (i as f64).sqrt());
        set_force_serial(true);
        let ser = map_indexed(64, |i| (i as f64).sqrt());
        set_force_serial(false);
        assert_eq!(par, ser);
    }
}
