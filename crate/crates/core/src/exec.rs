//! Execution policy for data-parallel loops.
//!
//! Work is split into fixed-size chunks whose boundaries depend only on the
//! input length. Chunk results are collected in order and folded sequentially,
//! so the parallel and sequential paths produce the same bits.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per chunk in chunked reductions.
pub const CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Exec {
    /// Maps `f` over `0..len`, preserving index order in the output.
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

    /// Evaluates `f` on consecutive chunks `[start, end)` of `0..len` and
    /// returns the per-chunk results in chunk order.
    pub fn map_chunks<T, F>(self, len: usize, chunk: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, usize) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        let count = len.div_ceil(chunk);
        self.map(count, |c| {
            let start = c * chunk;
            f(start, (start + chunk).min(len))
        })
    }

    /// Sums `f(i)` over `0..len` with a fixed chunked association order.
    pub fn sum<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.map_chunks(len, CHUNK, |a, b| (a..b).map(&f).sum::<f64>())
            .into_iter()
            .sum()
    }
}

/// Runs `f` with at most `jobs` worker threads. `jobs == 0` keeps the global
/// pool. Without the `parallel` feature this simply calls `f`.
pub fn with_jobs<R, F>(jobs: usize, f: F) -> std::result::Result<R, String>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs == 0 {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| e.to_string())?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        Ok(f())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = Exec::Parallel.map(1000, |i| i * 3);
        assert_eq!(v, (0..1000).map(|i| i * 3).collect::<Vec<_>>());
    }

    #[test]
    fn chunks_cover_range() {
        let spans = Exec::Sequential.map_chunks(10, 4, |a, b| (a, b));
        assert_eq!(spans, vec![(0, 4), (4, 8), (8, 10)]);
        assert!(Exec::Sequential.map_chunks(0, 4, |a, b| (a, b)).is_empty());
    }

    #[test]
    fn sum_is_policy_independent() {
        let f = |i: usize| ((i as f64) * 0.1).sin() / (1.0 + i as f64);
        let a = Exec::Sequential.sum(10_000, f);
        let b = Exec::Parallel.sum(10_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
        let c = with_jobs(1, || Exec::Parallel.sum(10_000, f)).unwrap();
        assert_eq!(a.to_bits(), c.to_bits());
    }
}
