//! Seed-level parallelism. Each seed's run is independent; results come
//! back in seed order either way.

/// Caps the worker pool. Only the first call has an effect.
#[cfg(feature = "parallel")]
pub fn init_threads(cap: Option<usize>) {
    if let Some(n) = cap {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
pub fn init_threads(_cap: Option<usize>) {}

#[cfg(feature = "parallel")]
pub fn map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    seeds.par_iter().map(|&s| f(s)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_seeds_sequential(seeds, f)
}

pub fn map_seeds_sequential<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    seeds.iter().map(|&s| f(s)).collect()
}
