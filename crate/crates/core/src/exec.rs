//! Fan-out abstraction for embarrassingly parallel work. Results always come
//! back in task order, so merging them sequentially is deterministic no matter
//! how many workers ran.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn workers(&self) -> usize;

    /// Runs `f(0) … f(tasks − 1)` and returns the results in task order.
    fn map<T: Send, G: Fn(usize) -> T + Sync>(&self, tasks: usize, f: G) -> Vec<T>;
}

/// Runs every task on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn workers(&self) -> usize {
        1
    }

    fn map<T: Send, G: Fn(usize) -> T + Sync>(&self, tasks: usize, f: G) -> Vec<T> {
        (0..tasks).map(f).collect()
    }
}

/// Splits `0..n` into `parts` contiguous ranges whose lengths differ by at
/// most one.
pub fn chunk_ranges(n: usize, parts: usize) -> Vec<core::ops::Range<usize>> {
    let parts = parts.max(1).min(n.max(1));
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_cover_everything_once() {
        for n in [0, 1, 7, 100] {
            for p in [1, 3, 8, 200] {
                let r = chunk_ranges(n, p);
                let mut next = 0;
                for c in &r {
                    assert_eq!(c.start, next);
                    next = c.end;
                }
                assert_eq!(next, n);
                let lens: Vec<_> = r.iter().map(|c| c.len()).collect();
                assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
            }
        }
    }

    #[test]
    fn sequential_preserves_order() {
        assert_eq!(Sequential.map(5, |i| i * i), [0, 1, 4, 9, 16]);
    }
}
