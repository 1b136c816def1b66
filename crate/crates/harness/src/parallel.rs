//! A small deterministic worker pool: tasks are pure functions of their
//! index, so results are identical for any worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Apply the `DLL_THREADS` environment cap to a requested worker count.
pub fn effective_workers(requested: usize) -> usize {
    let cap = std::env::var("DLL_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&c| c >= 1);
    match cap {
        Some(c) => requested.max(1).min(c),
        None => requested.max(1),
    }
}

/// Run `tasks` closures over a pool of `workers` threads, returning results
/// in task-index order. `f` must be a pure function of the index for the
/// determinism contract to hold.
pub fn run_indexed<T, F>(tasks: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.max(1).min(tasks.max(1));
    let slots: Vec<Mutex<Option<T>>> = (0..tasks).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks {
                    break;
                }
                let out = f(i);
                *slots[i].lock().expect("result slot") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("task completed"))
        .collect()
}
