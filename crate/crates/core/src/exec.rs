//! Work partitioning for the data-parallel cores.
//!
//! The expensive loops (sublattice filtering, lattice walks, projective point
//! scans) all reduce to the same shape: split a task list into independent
//! chunks, fold each chunk into a partial result, merge the partials.  With
//! the `parallel` feature (on by default) the chunked fold runs on the rayon
//! global pool; without it the crate compiles to the sequential fallback with
//! no dependency on rayon.  Both code paths are kept callable so benchmarks
//! can compare them directly.
//!
//! Invariants:
//! - merge must be associative and commutative; partial order of chunks is
//!   unspecified in parallel mode.
//! - results are bit-identical between modes (asserted by tests in the
//!   modules that use this).

/// Execution strategy for a chunked fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Process chunks one after another on the calling thread.
    Sequential,
    /// Process chunks on the rayon pool (falls back to sequential when the
    /// `parallel` feature is disabled).
    Parallel,
}

impl ExecMode {
    /// The default mode: parallel when compiled in, sequential otherwise.
    pub fn auto() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Fold every chunk with `work` and combine the results with `merge`.
///
/// `init` produces the identity of `merge`.
pub fn fold_chunks<C, A, W, M, I>(mode: ExecMode, chunks: Vec<C>, init: I, work: W, merge: M) -> A
where
    C: Send,
    A: Send,
    W: Fn(C) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
    I: Fn() -> A + Sync + Send,
{
    match mode {
        ExecMode::Sequential => fold_chunks_sequential(chunks, init, work, merge),
        ExecMode::Parallel => fold_chunks_parallel(chunks, init, work, merge),
    }
}

/// Sequential fallback, always available.
pub fn fold_chunks_sequential<C, A, W, M, I>(chunks: Vec<C>, init: I, work: W, merge: M) -> A
where
    W: Fn(C) -> A,
    M: Fn(A, A) -> A,
    I: Fn() -> A,
{
    let mut acc = init();
    for chunk in chunks {
        acc = merge(acc, work(chunk));
    }
    acc
}

/// Parallel implementation on the rayon global pool.
#[cfg(feature = "parallel")]
pub fn fold_chunks_parallel<C, A, W, M, I>(chunks: Vec<C>, init: I, work: W, merge: M) -> A
where
    C: Send,
    A: Send,
    W: Fn(C) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
    I: Fn() -> A + Sync + Send,
{
    use rayon::prelude::*;
    chunks
        .into_par_iter()
        .map(work)
        .reduce(&init, &merge)
}

/// Without the `parallel` feature the parallel entry point degrades to the
/// sequential fold so callers need no feature gates of their own.
#[cfg(not(feature = "parallel"))]
pub fn fold_chunks_parallel<C, A, W, M, I>(chunks: Vec<C>, init: I, work: W, merge: M) -> A
where
    C: Send,
    A: Send,
    W: Fn(C) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
    I: Fn() -> A + Sync + Send,
{
    fold_chunks_sequential(chunks, init, work, merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let chunks: Vec<u64> = (0..100).collect();
        let sum = |mode| {
            fold_chunks(mode, chunks.clone(), || 0u64, |c| c * c, |a, b| a + b)
        };
        // sum of squares 0..100
        assert_eq!(sum(ExecMode::Sequential), 328350);
        assert_eq!(sum(ExecMode::Parallel), 328350);
    }
}
