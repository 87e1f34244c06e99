//! Deterministic sample-parallel map.

use rayon::prelude::*;

/// Evaluates `f(0..count)` on `workers` threads, returning results in index order.
pub fn map_samples<T, G>(count: usize, workers: usize, f: G) -> Vec<T>
where
    T: Send,
    G: Fn(usize) -> T + Sync + Send,
{
    if workers <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
        Err(_) => (0..count).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_preserved() {
        let a = super::map_samples(50, 3, |i| i * i);
        assert_eq!(a, (0..50).map(|i| i * i).collect::<Vec<_>>());
    }
}
