//! Execution-mode switch for the data-parallel kernels.
//!
//! With the `parallel` feature (default) row loops run on the rayon pool.
//! Without it, or inside [`sequential`], the same closures run inline on the
//! calling thread. Every kernel reduces within a row in index order, so both
//! modes produce bitwise-identical results.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with all kernels forced onto the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let previous = FORCE_SEQUENTIAL.with(|flag| flag.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|flag| flag.set(previous));
    out
}

/// Whether kernels called from this thread will fan out to the rayon pool.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(Cell::get)
}

/// Applies `f(row_index, row)` to consecutive `width`-sized chunks of `data`.
pub(crate) fn for_each_row_mut<F>(data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    data.chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Maps `f` over `0..len`, preserving index order in the output.
pub(crate) fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}
