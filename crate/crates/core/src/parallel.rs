//! Order-preserving data parallelism over scoped threads.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::Result;

static THREADS: AtomicUsize = AtomicUsize::new(1);

/// Worker count for [`map`]; 0 selects the available parallelism.
pub fn set_threads(n: usize) {
    let n = if n == 0 { std::thread::available_parallelism().map_or(1, |v| v.get()) } else { n };
    THREADS.store(n, Ordering::Relaxed);
}

pub fn threads() -> usize {
    THREADS.load(Ordering::Relaxed)
}

/// Applies `f` to every item in contiguous chunks; results keep input order,
/// and the first error in input order is returned.
pub fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync) -> Result<Vec<U>> {
    let workers = threads().min(items.len());
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let parts: Vec<Result<Vec<U>>> = std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Result<Vec<U>>>())).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn preserves_order_and_first_error() {
        set_threads(3);
        let v: Vec<usize> = (0..10).collect();
        assert_eq!(map(&v, |x| Ok(x * 2)).unwrap(), (0..10).map(|x| x * 2).collect::<Vec<_>>());
        let e = map(&v, |&x| if x % 4 == 3 { Err(Error::Degenerate(x.to_string())) } else { Ok(x) }).unwrap_err();
        assert!(matches!(e, Error::Degenerate(m) if m == "3"));
        set_threads(1);
    }
}
