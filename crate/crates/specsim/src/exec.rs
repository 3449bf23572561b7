//! Execution helpers shared by the mechanism and the simulation driver.
//!
//! [`ordered_map`] fans work out over rayon when the `parallel` feature is
//! enabled and runs inline otherwise; output order always matches input
//! order, so results are identical either way. [`ordered_map_seq`] is the
//! always-sequential twin used as the reference path in tests and benches.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
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

pub(crate) fn ordered_map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}
