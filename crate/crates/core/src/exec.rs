//! Data-parallel execution helpers.
//!
//! All ensemble, boundary-transport and sweep loops in the crate go through
//! `map_items` / `for_each_item`, which dispatch to rayon when the `parallel`
//! feature (default) is enabled and to plain iterators otherwise. The
//! explicitly sequential twins are kept public so benchmarks can compare the
//! two paths inside one binary.

/// Map `f` over `items`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_items<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Map `f` over `items` (sequential fallback).
#[cfg(not(feature = "parallel"))]
pub fn map_items<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Mutate every item in place, in parallel when the feature is on.
#[cfg(feature = "parallel")]
pub fn for_each_item<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter_mut().for_each(f);
}

/// Mutate every item in place (sequential fallback).
#[cfg(not(feature = "parallel"))]
pub fn for_each_item<T, F>(items: &mut [T], f: F)
where
    F: Fn(&mut T),
{
    items.iter_mut().for_each(f);
}

/// Always-sequential map, for benchmark baselines.
pub fn map_items_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Always-sequential in-place loop, for benchmark baselines.
pub fn for_each_item_seq<T, F>(items: &mut [T], f: F)
where
    F: Fn(&mut T),
{
    items.iter_mut().for_each(f);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let a = map_items(&xs, |x| x * x);
        let b = map_items_seq(&xs, |x| x * x);
        assert_eq!(a, b);
    }
}
