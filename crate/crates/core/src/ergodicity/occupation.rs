//! Time-averaged occupation measures and the empirical Markov property.

use serde::{Deserialize, Serialize};

use super::features::FeatureMap;
use super::measure::{kr_distance, two_sample_band, EmpiricalMeasure};
use crate::coefficients::CoefficientSet;
use crate::ensemble::Ensemble;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::noise::{aligned_steps, sample_path, NoisePath};
use crate::solver::{check_field, solve, step_range, FvSolver, SolveOptions};
use crate::stats::derive_seed;

/// Features of the states at `burn_in + stride, burn_in + 2 stride, …, ≤ t`
/// along the solution driven by `path`, as a uniform measure in time order.
#[allow(clippy::too_many_arguments)]
pub fn occupation_measure(
    rho0: &[f64],
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
    t: f64,
    burn_in: f64,
    stride: f64,
    feature: FeatureMap,
) -> Result<EmpiricalMeasure> {
    check_field(&grid, rho0)?;
    feature.validate(&grid)?;
    if !(stride >= path.dt) {
        return Err(invalid("stride", format!("{stride} is below dt = {}", path.dt)));
    }
    let every = aligned_steps(stride, path.dt)? as usize;
    let (_, k_burn) = step_range(path, path.origin, burn_in)?;
    let (k0, k1) = step_range(path, path.origin, t)?;
    if k_burn + every > k1 {
        return Err(Error::EmptySample("occupation window"));
    }
    let mut solver = FvSolver::new(grid, cs, &path.basis, path.dt)?;
    let mut rho = rho0.to_vec();
    let mut samples = Vec::with_capacity((k1 - k_burn) / every);
    for k in k0..k1 {
        solver.step(&mut rho, path, k, k as u64)?;
        let done = k + 1;
        if done > k_burn && (done - k_burn) % every == 0 {
            samples.push(feature.apply(&grid, &rho));
        }
    }
    EmpiricalMeasure::uniform(feature, samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovCheck {
    /// KR distance between the direct and the restarted laws at `t`.
    pub distance: f64,
    /// `true` when `distance` is exact (one-dimensional features).
    pub exact: bool,
    /// Upper 95% quantile of the two-sample bootstrap distance.
    pub band: f64,
    pub within_band: bool,
    pub direct: EmpiricalMeasure,
    pub restarted: EmpiricalMeasure,
}

/// Compares the law of `ρ(t)` from `ρ0` with the law obtained by running to
/// `s`, then restarting from the realised state with fresh independent noise
/// for the remaining `t − s`.
///
/// Member `i` of `ens` drives the direct run; the restarted runs use seeds
/// derived from `ens.seeds[i]` so the two samples are independent.
#[allow(clippy::too_many_arguments)]
pub fn chapman_kolmogorov_check(
    rho0: &[f64],
    cs: &CoefficientSet,
    s: f64,
    t: f64,
    feature: FeatureMap,
    ens: &Ensemble,
    resamples: usize,
    boot_seed: u64,
) -> Result<MarkovCheck> {
    let grid = ens.grid;
    check_field(&grid, rho0)?;
    feature.validate(&grid)?;
    if !(0.0 <= s && s <= t) {
        return Err(invalid("s", format!("need 0 ≤ s ≤ t, got s = {s}, t = {t}")));
    }
    aligned_steps(s, ens.dt)?;
    aligned_steps(t, ens.dt)?;
    let opts = SolveOptions {
        save_every: usize::MAX,
        store_states: false,
    };
    let direct = ens.map(t, |_, path| {
        let tr = solve(rho0, 0.0, t, cs, grid, path, opts)?;
        Ok(feature.apply(&grid, tr.last()))
    })?;
    let restarted = crate::ensemble::try_run_indexed(ens.len(), ens.workers, |i| {
        let first_seed = derive_seed(ens.seeds[i], 1);
        let second_seed = derive_seed(ens.seeds[i], 2);
        let mid = if s > 0.0 {
            let p = sample_path(ens.basis.clone(), ens.dt, s, first_seed)?;
            solve(rho0, 0.0, s, cs, grid, &p, opts)?.last().to_vec()
        } else {
            rho0.to_vec()
        };
        let rest = t - s;
        let end = if aligned_steps(rest, ens.dt)? > 0 {
            let p = sample_path(ens.basis.clone(), ens.dt, rest, second_seed)?;
            solve(&mid, 0.0, rest, cs, grid, &p, opts)?.last().to_vec()
        } else {
            mid
        };
        Ok::<_, Error>(feature.apply(&grid, &end))
    })?;
    let direct = EmpiricalMeasure::uniform(feature, direct)?;
    let restarted = EmpiricalMeasure::uniform(feature, restarted)?;
    let d = kr_distance(&direct, &restarted)?;
    let band = two_sample_band(&direct, &restarted, resamples, boot_seed, 0.95)?;
    Ok(MarkovCheck {
        distance: d.value,
        exact: d.exact,
        band,
        within_band: d.value <= band,
        direct,
        restarted,
    })
}
