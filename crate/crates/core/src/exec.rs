//! Execution strategy for the data-parallel inner loops.
//!
//! Grid work is decomposed into fixed m-plane slabs regardless of how many
//! worker threads run them, and reductions combine the per-slab partials
//! in slab order with pairwise summation. Results are therefore
//! bit-identical between the sequential fallback and the rayon path, for
//! any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// Run `f` once per slab, writing into disjoint mutable chunks of `out`.
    /// Slab `i` receives `out[i * slab_len .. (i + 1) * slab_len]`.
    pub fn for_each_slab_mut<F>(self, out: &mut [f64], slab_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        debug_assert_eq!(out.len() % slab_len, 0);
        match self {
            Parallelism::Sequential => {
                for (i, chunk) in out.chunks_mut(slab_len).enumerate() {
                    f(i, chunk);
                }
            }
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => {
                out.par_chunks_mut(slab_len).enumerate().for_each(|(i, chunk)| f(i, chunk));
            }
        }
    }

    /// Map each slab index to a value; the returned vector is in slab order.
    pub fn map_slabs<T, F>(self, slabs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (0..slabs).map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => (0..slabs).into_par_iter().map(f).collect(),
        }
    }

    /// Deterministic sum of one partial per slab.
    pub fn sum_slabs<F>(self, slabs: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        pairwise_sum(&self.map_slabs(slabs, f))
    }

    /// Maximum of one partial per slab (exact; order-independent).
    pub fn max_slabs<F>(self, slabs: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.map_slabs(slabs, f).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pairwise (cascade) summation; fixed association order for a given length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
