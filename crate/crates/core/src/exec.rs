//! Data-parallel helpers. With the `parallel` feature the work is spread
//! over rayon's pool; without it everything runs on the calling thread.
//! Results are always returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Maps `f` over `items`, preserving order.
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
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
        items.iter().map(f).collect()
    }
}

/// Sequential reference for `map_ordered`.
pub fn map_sequential<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Execution strategy for order-preserving maps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            Execution::Sequential => map_sequential(items, f),
            Execution::Parallel => map_ordered(items, f),
        }
    }
}

/// Index of the first minimum; NaN entries are never selected.
pub fn first_argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if *v >= b => {}
            _ => best = Some((i, *v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Runs `f` with at most `jobs` worker threads (0 = library default).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if jobs == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_first_occurrence() {
        assert_eq!(first_argmin(&[3.0, 1.0, 1.0, 2.0]), Some(1));
        assert_eq!(first_argmin(&[f64::NAN, 2.0]), Some(1));
        assert_eq!(first_argmin(&[]), None);
    }

    #[test]
    fn ordered_matches_sequential() {
        let xs: Vec<u64> = (0..1000).collect();
        let f = |x: &u64| x.wrapping_mul(2654435761) % 97;
        assert_eq!(map_ordered(&xs, f), map_sequential(&xs, f));
        assert_eq!(with_jobs(2, || map_ordered(&xs, f)), map_sequential(&xs, f));
        assert_eq!(Execution::Parallel.map(&xs, f), Execution::Sequential.map(&xs, f));
    }
}
