//! Thin dispatch layer between the data-parallel and sequential code paths.
//!
//! Every hot loop in this crate maps an independent computation over a slice
//! (grid points, trial instances, sweep branches, temperature rows). With the
//! `parallel` feature enabled those maps run on the rayon pool; without it
//! they fall back to plain iterators. The `*_seq` variants are always
//! compiled so the two paths can be benchmarked against each other.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_slice_seq(items, f)
    }
}

/// Sequential twin of [`map_slice`].
pub fn map_slice_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map `f` over the integer range `0..n`, preserving order.
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indices_seq(n, f)
    }
}

/// Sequential twin of [`map_indices`].
pub fn map_indices_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_maps_agree() {
        let xs: Vec<u64> = (0..257).collect();
        let sq = |x: &u64| x * x;
        assert_eq!(map_slice(&xs, sq), map_slice_seq(&xs, sq));
        assert_eq!(map_indices(33, |i| 3 * i), map_indices_seq(33, |i| 3 * i));
    }
}
