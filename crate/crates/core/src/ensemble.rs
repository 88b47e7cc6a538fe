//! Fan-out of independent ensemble members.
//!
//! Members are indexed and results come back in index order, so a reduction
//! over the returned vector is independent of the number of workers.

use std::sync::Arc;

use rayon::prelude::*;

use crate::coefficients::CoefficientSet;
use crate::error::Result;
use crate::grid::Grid;
use crate::noise::{sample_path, NoiseBasis, NoisePath};
use crate::solver::{solve, SolveOptions, Trajectory};
use crate::stats::derive_seed;

/// Evaluates `f(0), …, f(n−1)` on `workers` threads (`0` uses the global
/// pool, `1` runs serially on the caller's thread).
pub fn run_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match workers {
        1 => (0..n).map(f).collect(),
        0 => (0..n).into_par_iter().map(f).collect(),
        w => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            Err(_) => (0..n).map(f).collect(),
        },
    }
}

/// Like [`run_indexed`] for fallible members; the first error by index wins.
pub fn try_run_indexed<T, E, F>(n: usize, workers: usize, f: F) -> std::result::Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> std::result::Result<T, E> + Sync + Send,
{
    run_indexed(n, workers, f).into_iter().collect()
}

/// Grid, noise and seeds shared by the members of a Monte Carlo ensemble.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub grid: Grid,
    pub basis: Arc<NoiseBasis>,
    pub dt: f64,
    /// One seed per member; member `i` is driven by `sample_path(.., seeds[i])`.
    pub seeds: Vec<u64>,
    pub workers: usize,
}

impl Ensemble {
    pub fn new(grid: Grid, basis: Arc<NoiseBasis>, dt: f64, seeds: Vec<u64>) -> Self {
        Self {
            grid,
            basis,
            dt,
            seeds,
            workers: 1,
        }
    }

    /// `n` members with seeds `derive_seed(seed0, 0..n)`.
    pub fn derived(grid: Grid, basis: Arc<NoiseBasis>, dt: f64, seed0: u64, n: usize) -> Self {
        Self::new(grid, basis, dt, (0..n as u64).map(|i| derive_seed(seed0, i)).collect())
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn path(&self, member: usize, horizon: f64) -> Result<NoisePath> {
        sample_path(self.basis.clone(), self.dt, horizon.max(self.dt), self.seeds[member])
    }

    /// Evaluates `f(member, path)` for every member on a path covering `[0, horizon]`.
    pub fn map<T, F>(&self, horizon: f64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &NoisePath) -> Result<T> + Sync + Send,
    {
        try_run_indexed(self.len(), self.workers, |i| f(i, &self.path(i, horizon)?))
    }

    /// Diagnostics-only trajectories from `rho0` on `[0, t]`, one per member.
    pub fn trajectories(
        &self,
        rho0: &[f64],
        cs: &CoefficientSet,
        t: f64,
        save_every: usize,
    ) -> Result<Vec<Trajectory>> {
        let opts = SolveOptions {
            save_every,
            store_states: false,
        };
        self.map(t, |_, path| solve(rho0, 0.0, t, cs, self.grid, path, opts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_does_not_depend_on_workers() {
        let f = |i: usize| (i as f64).sqrt();
        let a = run_indexed(100, 1, f);
        let b = run_indexed(100, 3, f);
        assert_eq!(a, b);
    }
}
