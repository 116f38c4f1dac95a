//! Data-parallel map with a sequential fallback when the `parallel` feature
//! is off. Outputs are collected in index order, so the two paths return
//! identical vectors and downstream reductions stay bit-stable.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Always sequential; the benchmark baseline and the reference path for
/// equality tests.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_elementwise() {
        let f = |i: usize| (i as f64).sqrt() * 3.5 - i as f64;
        assert_eq!(map_indexed(1000, f), map_indexed_seq(1000, f));
    }
}
