//! Bounded parallel map whose results are delivered in input order.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use crate::error::Result;

/// Runs `f` over `items` on up to `parallelism` threads and hands each result
/// to `sink` in input order, as soon as every earlier result has been handed
/// over. A sink error stops further sink calls; workers drain and the first
/// error is returned.
pub fn ordered_map<T, R>(
    items: &[T],
    parallelism: usize,
    f: impl Fn(&T) -> R + Sync,
    mut sink: impl FnMut(R) -> Result<()>,
) -> Result<()>
where
    T: Sync,
    R: Send,
{
    if items.is_empty() {
        return Ok(());
    }
    let workers = parallelism.clamp(1, items.len());
    if workers == 1 {
        for item in items {
            sink(f(item))?;
        }
        return Ok(());
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, R)>();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, f) = (&next, &f);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                if tx.send((i, f(&items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut cursor = 0usize;
        let mut failure = None;
        for (i, r) in rx {
            pending.insert(i, r);
            while let Some(r) = pending.remove(&cursor) {
                cursor += 1;
                if failure.is_none() {
                    if let Err(e) = sink(r) {
                        failure = Some(e);
                        next.store(items.len(), Ordering::SeqCst);
                    }
                }
            }
        }
        failure.map_or(Ok(()), Err)
    })
}
