//! Scoped-thread implementation of the core [`Executor`].

use adaptive_hash_core::exec::{chunk_ranges, Executor};

pub const THREADS_ENV: &str = "ADAPTIVE_HASH_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Threads {
    workers: usize,
}

impl Threads {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }

    /// Worker count from `ADAPTIVE_HASH_THREADS`, else the available
    /// parallelism.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(Self::new(n)),
                _ => Err(format!("{THREADS_ENV} must be a positive integer, got '{v}'")),
            },
            Err(_) => Ok(Self::new(std::thread::available_parallelism().map_or(1, |n| n.get()))),
        }
    }
}

impl Executor for Threads {
    fn workers(&self) -> usize {
        self.workers
    }

    fn map<T: Send, G: Fn(usize) -> T + Sync>(&self, tasks: usize, f: G) -> Vec<T> {
        if self.workers == 1 || tasks <= 1 {
            return (0..tasks).map(f).collect();
        }
        let f = &f;
        let ranges = chunk_ranges(tasks, self.workers);
        std::thread::scope(|s| {
            let handles: Vec<_> = ranges
                .into_iter()
                .map(|r| s.spawn(move || r.map(f).collect::<Vec<T>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker thread panicked"))
                .collect()
        })
    }
}
