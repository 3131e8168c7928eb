//! Order-preserving batch maps with a parallel backend.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] runs on the
//! rayon global pool; without it every mode runs sequentially. Results are
//! always returned in input order, so parallel and sequential runs produce
//! identical output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Maps over `0..len`.
    pub fn map_range<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }

    /// Maximum of `f` over `0..len` (NaN-free inputs), with the first index attaining it.
    pub fn argmax_range<F>(self, len: usize, f: F) -> Option<(usize, f64)>
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let better = |a: (usize, f64), b: (usize, f64)| {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        };
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(|i| (i, f(i))).reduce_with(better)
            }
            _ => (0..len).map(|i| (i, f(i))).reduce(better),
        }
    }
}

/// Caps the global worker pool. A no-op without the `parallel` feature.
/// Fails if the pool was already initialised.
pub fn configure_threads(threads: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let items: Vec<u64> = (0..1000).collect();
        let a = Exec::Sequential.map(&items, |v| v * v);
        let b = Exec::Parallel.map(&items, |v| v * v);
        assert_eq!(a, b);
        let f = |i: usize| -((i as f64) - 417.0).powi(2);
        assert_eq!(Exec::Sequential.argmax_range(1000, f), Some((417, -0.0)));
        assert_eq!(Exec::Parallel.argmax_range(1000, f), Exec::Sequential.argmax_range(1000, f));
    }
}
