//! Data-parallel execution with a sequential fallback.
//!
//! Results are always collected in index order, so aggregates are identical
//! whichever mode runs them.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `f(i)` for every i in 0..len, in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
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

    /// Apply `f` to consecutive chunks of `items`, in chunk order.
    pub fn map_chunks<I, T, F>(self, items: &[I], chunk: usize, f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&[I]) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_chunks(chunk).map(f).collect()
            }
            _ => items.chunks(chunk).map(f).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Run `f` with at most `threads` workers (0 = library default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let a = Exec::Sequential.map(1000, |i| i * i % 7);
        let b = Exec::Parallel.map(1000, |i| i * i % 7);
        assert_eq!(a, b);
        let v: Vec<u32> = (0..100).collect();
        let s1 = Exec::Sequential.map_chunks(&v, 7, |c| c.iter().sum::<u32>());
        let s2 = Exec::Parallel.map_chunks(&v, 7, |c| c.iter().sum::<u32>());
        assert_eq!(s1, s2);
    }
}
