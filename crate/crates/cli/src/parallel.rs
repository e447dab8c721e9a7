//! Bounded per-point parallelism with an order-preserving merge.

use rayon::prelude::*;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(usize);

impl Workers {
    pub fn new(n: usize) -> CliResult<Self> {
        if n == 0 {
            return Err(CliError::config("--workers", "need at least one worker"));
        }
        Ok(Self(n))
    }

    pub fn available() -> Self {
        Self(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// `f(i, &items[i])` for every item on at most `self` threads. Results
    /// keep input order; on failure the error of the lowest index is
    /// returned, so the outcome does not depend on scheduling.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> CliResult<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> CliResult<R> + Sync,
    {
        let run = || -> Vec<CliResult<R>> { items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect() };
        let results = if self.0 == 1 {
            items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.0)
                .build()
                .map_err(|e| CliError::config("--workers", e.to_string()))?
                .install(run)
        };
        results.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_first_error_are_stable() {
        let xs: Vec<u64> = (0..200).collect();
        for w in [1, 3] {
            let out = Workers::new(w).unwrap().map(&xs, |i, &x| Ok(i as u64 + x)).unwrap();
            assert_eq!(out, (0..200).map(|x| 2 * x).collect::<Vec<_>>());
            let err = Workers::new(w)
                .unwrap()
                .map(&xs, |i, _| if i % 50 == 49 { Err(CliError::config(i.to_string(), "x")) } else { Ok(()) })
                .unwrap_err();
            assert!(matches!(err, CliError::Config { field, .. } if field == "49"));
        }
        assert!(Workers::new(0).is_err());
    }
}
