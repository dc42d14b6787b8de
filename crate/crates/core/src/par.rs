//! Execution-mode switch for the data-parallel inner loops.
//!
//! Every parallel site in the crate goes through [`Parallelism`]. With the
//! `parallel` feature disabled, [`Parallelism::Parallel`] silently degrades to
//! sequential iteration, so results never depend on the mode: all reductions
//! happen in input order after the map step.

/// How a batch of independent work items is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// The mode used when callers do not choose one.
    pub fn auto() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }

    /// Maps `f` over `items`, preserving input order in the output.
    #[allow(unused_variables)]
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self == Parallelism::Parallel && items.len() > 1 {
                return items.par_iter().map(f).collect();
            }
        }
        items.iter().map(f).collect()
    }

    /// Maps `f` over `0..n`, preserving index order in the output.
    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self == Parallelism::Parallel && n > 1 {
                return (0..n).into_par_iter().map(f).collect();
            }
        }
        (0..n).map(f).collect()
    }
}
