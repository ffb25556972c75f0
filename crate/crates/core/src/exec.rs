//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the [`Exec::Parallel`] mode
//! fans work out over rayon's pool. Without it, every mode runs on the
//! calling thread. Reductions always combine fixed-size chunk partials in
//! index order, so results are bitwise identical across modes and thread
//! counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of elements per partial sum in chunked reductions.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Map `f` over `0..len`, preserving index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..len).into_par_iter().map(f).collect(),
            _ => (0..len).map(f).collect(),
        }
    }

    /// Sum `f(i)` over `0..len` by chunk partials combined in order.
    pub fn sum<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let chunks = len.div_ceil(CHUNK);
        let partial = |c: usize| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(len);
            (start..end).map(&f).sum::<f64>()
        };
        self.map(chunks, partial).into_iter().sum()
    }
}
