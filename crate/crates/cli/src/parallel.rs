//! Small indexed worker pool. Items are claimed from an atomic counter and
//! results land in their own slots, so the output is identical for any
//! worker count.

use std::sync::Mutex;
use std::sync::atomic::{AtomicUsize, Ordering};

pub fn map_indexed<T, F>(n_items: usize, jobs: usize, f: F) -> anyhow::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> anyhow::Result<T> + Sync,
{
    let jobs = jobs.max(1).min(n_items.max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<anyhow::Result<T>>>> =
        Mutex::new((0..n_items).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| {
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n_items {
                        break;
                    }
                    let result = f(i);
                    slots.lock().expect("worker panicked holding the lock")[i] = Some(result);
                }
            });
        }
    });

    slots
        .into_inner()
        .expect("all workers joined")
        .into_iter()
        .map(|slot| slot.expect("every slot was filled"))
        .collect()
}
