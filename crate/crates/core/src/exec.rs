//! Data-parallel execution over independent work items.
//!
//! Every work item receives its own randomness stream derived from a base
//! seed and the item index, so the parallel and sequential routes produce
//! identical results in identical order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    /// Uses the rayon thread pool when the `parallel` feature is enabled,
    /// otherwise falls back to sequential execution.
    #[default]
    Parallel,
}

/// Randomness stream number `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => par_map(n, f),
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
