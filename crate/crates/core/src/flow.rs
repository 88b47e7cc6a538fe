//! Pathwise properties of the discrete flow: L¹ contraction of solutions
//! driven by the same noise, the semiflow and cocycle identities, and the
//! modulus of continuity in the initial time.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::ensemble::try_run_indexed;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::noise::{sample_path, shift_path, NoiseBasis, NoisePath};
use crate::solver::{check_field, solve, step_range, FvSolver, SolveOptions};
use crate::stats::{bootstrap, linear_fit, mean, percentile_interval, Interval};

/// Below this L¹ distance two coupled solutions count as identical.
pub const UNIQUENESS_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub times: Vec<f64>,
    /// `d(t) = ‖ρ¹(t) − ρ²(t)‖_{L¹}`
    pub distance: Vec<f64>,
    /// `C(t) d(0)` with `C(t) = exp(t(‖B‖_Lip + ‖f‖_Lip))`
    pub bound: Vec<f64>,
    /// `max_t d(t) / (C(t) d(0))` over every step, not only saved ones.
    pub max_ratio: f64,
    /// Steps where the ratio exceeds `1 + tol`.
    pub violations: usize,
    pub tol: f64,
    /// `d(0) = 0`; then `violations` counts steps with `d ≥ UNIQUENESS_FLOOR`.
    pub degenerate: bool,
    /// `max_{t₁ ≤ t₂} d(t₂)/d(t₁)` restricted to distances above roundoff.
    pub max_expansion: f64,
}

impl CouplingReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Runs both initial data through the same increments of `path` from its
/// origin to `t`, stepping them in lock-step with one solver.
#[allow(clippy::too_many_arguments)]
pub fn contraction_report(
    rho01: &[f64],
    rho02: &[f64],
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
    t: f64,
    tol: f64,
    save_every: usize,
) -> Result<CouplingReport> {
    check_field(&grid, rho01)?;
    check_field(&grid, rho02)?;
    if !(tol >= 0.0) {
        return Err(invalid("tol", format!("{tol} must be nonnegative")));
    }
    if save_every == 0 {
        return Err(invalid("save_every", "must be at least 1"));
    }
    let (k0, k1) = step_range(path, path.origin, t)?;
    let mut solver = FvSolver::new(grid, cs, &path.basis, path.dt)?;
    let rate = cs.b_lip(grid.dim, grid.length) + cs.f_lip();
    let mut a = rho01.to_vec();
    let mut b = rho02.to_vec();
    let d0 = grid.l1_distance(&a, &b);
    let degenerate = d0 == 0.0;
    let floor = 1e-9 * (grid.l1_norm(&a) + grid.l1_norm(&b)).max(f64::MIN_POSITIVE);

    let mut rep = CouplingReport {
        times: vec![path.origin],
        distance: vec![d0],
        bound: vec![d0],
        max_ratio: if degenerate { 0.0 } else { 1.0 },
        violations: 0,
        tol,
        degenerate,
        max_expansion: 1.0,
    };
    let mut running_min = d0;
    for k in k0..k1 {
        solver.step(&mut a, path, k, k as u64)?;
        solver.step(&mut b, path, k, k as u64)?;
        let elapsed = (k + 1 - k0) as f64 * path.dt;
        let d = grid.l1_distance(&a, &b);
        let c = (elapsed * rate).exp();
        if degenerate {
            rep.max_ratio = rep.max_ratio.max(d);
            if d >= UNIQUENESS_FLOOR {
                rep.violations += 1;
            }
        } else {
            let ratio = d / (c * d0);
            rep.max_ratio = rep.max_ratio.max(ratio);
            if ratio > 1.0 + tol {
                rep.violations += 1;
            }
        }
        if d > floor && running_min > floor {
            rep.max_expansion = rep.max_expansion.max(d / running_min);
        }
        running_min = running_min.min(d);
        if (k + 1 - k0) % save_every == 0 || k + 1 == k1 {
            rep.times.push(path.origin + elapsed);
            rep.distance.push(d);
            rep.bound.push(c * d0);
        }
    }
    Ok(rep)
}

/// Aggregate of [`contraction_report`] over independent paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub seeds: Vec<u64>,
    pub max_ratio: f64,
    pub violations: usize,
    pub paths_with_violations: usize,
    pub max_expansion: f64,
    pub reports: Vec<CouplingReport>,
}

/// One coupled pair per seed, each on a fresh path.
#[allow(clippy::too_many_arguments)]
pub fn contraction_ensemble(
    rho01: &[f64],
    rho02: &[f64],
    cs: &CoefficientSet,
    grid: Grid,
    basis: &Arc<NoiseBasis>,
    dt: f64,
    t: f64,
    tol: f64,
    seeds: &[u64],
    save_every: usize,
    workers: usize,
) -> Result<CouplingSummary> {
    let reports = try_run_indexed(seeds.len(), workers, |i| {
        let path = sample_path(basis.clone(), dt, t, seeds[i])?;
        contraction_report(rho01, rho02, cs, grid, &path, t, tol, save_every)
    })?;
    Ok(CouplingSummary {
        seeds: seeds.to_vec(),
        max_ratio: reports.iter().map(|r| r.max_ratio).fold(0.0, f64::max),
        violations: reports.iter().map(|r| r.violations).sum(),
        paths_with_violations: reports.iter().filter(|r| r.violations > 0).count(),
        max_expansion: reports.iter().map(|r| r.max_expansion).fold(1.0, f64::max),
        reports,
    })
}

/// `‖ρ(t, s, ρ0) − ρ(t, s₁, ρ(s₁, s, ρ0))‖_{L¹}` on one path.
#[allow(clippy::too_many_arguments)]
pub fn semiflow_residual(
    rho0: &[f64],
    s: f64,
    s1: f64,
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
) -> Result<f64> {
    if !(s <= s1 && s1 <= t) {
        return Err(invalid("s1", format!("need s ≤ s1 ≤ t, got {s}, {s1}, {t}")));
    }
    let opts = SolveOptions {
        save_every: usize::MAX,
        store_states: false,
    };
    let direct = solve(rho0, s, t, cs, grid, path, opts)?;
    let first = solve(rho0, s, s1, cs, grid, path, opts)?;
    let restarted = solve(first.last(), s1, t, cs, grid, path, opts)?;
    Ok(grid.l1_distance(direct.last(), restarted.last()))
}

/// `‖ρ(s + t, s, ρ0, ω) − ρ(t, 0, ρ0, θ_s ω)‖_{L¹}` with `θ_s` from
/// [`shift_path`]; `s` is an absolute time on `path`.
pub fn cocycle_residual(
    rho0: &[f64],
    s: f64,
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
) -> Result<f64> {
    if t < 0.0 {
        return Err(invalid("t", format!("{t} is negative")));
    }
    let opts = SolveOptions {
        save_every: usize::MAX,
        store_states: false,
    };
    let direct = solve(rho0, s, s + t, cs, grid, path, opts)?;
    let shifted = shift_path(path, s - path.origin)?;
    let replay = solve(rho0, 0.0, t, cs, grid, &shifted, opts)?;
    Ok(grid.l1_distance(direct.last(), replay.last()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartPair {
    pub s_i: f64,
    pub s_j: f64,
    /// `sup_{t ≤ T} ‖ρ(t, s_i, ρ0) − ρ(t, s_j, ρ0)‖_{L¹}`
    pub distance: f64,
}

impl StartPair {
    pub fn gap(&self) -> f64 {
        (self.s_i - self.s_j).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub pairs: Vec<StartPair>,
    /// Fitted Hölder exponent.
    pub eta_fit: f64,
    /// Fitted constant: `distance ≈ X |s − s′|^η`.
    pub x_fit: f64,
    /// Pairs entering the fit.
    pub fitted: usize,
}

/// Pairwise sup-in-time distances between solutions started from `rho0` at
/// each time of `s_grid`, all driven by `path`.
pub fn start_time_distances(
    rho0: &[f64],
    s_grid: &[f64],
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
) -> Result<Vec<StartPair>> {
    check_field(&grid, rho0)?;
    if s_grid.len() < 3 {
        return Err(invalid("s_grid", format!("{} points, need at least 3", s_grid.len())));
    }
    let mut starts = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        if s > t {
            return Err(invalid("s_grid", format!("start {s} exceeds the horizon {t}")));
        }
        starts.push(step_range(path, s, t)?.0);
    }
    let (_, k_end) = step_range(path, path.origin, t)?;
    let k_first = *starts.iter().min().unwrap();
    let m = starts.len();
    let mut solver = FvSolver::new(grid, cs, &path.basis, path.dt)?;
    let mut states: Vec<Vec<f64>> = vec![rho0.to_vec(); m];
    let mut sup = vec![0.0f64; m * m];
    let mut update = |states: &[Vec<f64>], at: usize| {
        for i in 0..m {
            for j in i + 1..m {
                if starts[i] <= at && starts[j] <= at {
                    let d = grid.l1_distance(&states[i], &states[j]);
                    sup[i * m + j] = sup[i * m + j].max(d);
                }
            }
        }
    };
    update(&states, k_first);
    for k in k_first..k_end {
        for (i, st) in states.iter_mut().enumerate() {
            if starts[i] <= k {
                solver.step(st, path, k, k as u64)?;
            }
        }
        update(&states, k + 1);
    }
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            pairs.push(StartPair {
                s_i: s_grid[i],
                s_j: s_grid[j],
                distance: sup[i * m + j],
            });
        }
    }
    Ok(pairs)
}

/// Log-log least squares of distance against start-time gap over pairs with
/// gap at least `min_gap` and positive distance.
fn fit_modulus(pairs: &[StartPair], distances: &[f64], min_gap: f64) -> Result<(f64, f64, usize)> {
    let (x, y): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .zip(distances)
        .filter(|(p, &d)| p.gap() >= min_gap && d > 0.0)
        .map(|(p, &d)| (p.gap().ln(), d.ln()))
        .unzip();
    let fit = linear_fit(&x, &y)?;
    Ok((fit.slope, fit.intercept.exp(), x.len()))
}

/// Hölder fit of the initial-time modulus on one path; pairs closer than
/// `4Δt` are excluded.
pub fn initial_time_modulus(
    rho0: &[f64],
    s_grid: &[f64],
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
) -> Result<ModulusReport> {
    let pairs = start_time_distances(rho0, s_grid, t, cs, grid, path)?;
    let d: Vec<f64> = pairs.iter().map(|p| p.distance).collect();
    let (eta_fit, x_fit, fitted) = fit_modulus(&pairs, &d, 4.0 * path.dt)?;
    Ok(ModulusReport {
        pairs,
        eta_fit,
        x_fit,
        fitted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModulus {
    pub seeds: Vec<u64>,
    /// Pairs with the path-averaged distance.
    pub pairs: Vec<StartPair>,
    pub eta_fit: f64,
    pub x_fit: f64,
    /// Percentile bootstrap interval for `η` over resampled paths.
    pub eta_ci: Interval,
}

/// Fits the modulus to path-averaged distances and bootstraps over paths.
#[allow(clippy::too_many_arguments)]
pub fn modulus_ensemble(
    rho0: &[f64],
    s_grid: &[f64],
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    basis: &Arc<NoiseBasis>,
    dt: f64,
    seeds: &[u64],
    resamples: usize,
    boot_seed: u64,
    workers: usize,
) -> Result<EnsembleModulus> {
    if seeds.is_empty() {
        return Err(Error::EmptySample("seeds"));
    }
    let per_path = try_run_indexed(seeds.len(), workers, |i| {
        let path = sample_path(basis.clone(), dt, t, seeds[i])?;
        start_time_distances(rho0, s_grid, t, cs, grid, &path)
    })?;
    let template = per_path[0].clone();
    let n_pairs = template.len();
    let averaged = |idx: &[usize]| -> Vec<f64> {
        (0..n_pairs)
            .map(|p| mean(&idx.iter().map(|&i| per_path[i][p].distance).collect::<Vec<_>>()))
            .collect()
    };
    let all: Vec<usize> = (0..seeds.len()).collect();
    let avg = averaged(&all);
    let min_gap = 4.0 * dt;
    let (eta_fit, x_fit, _) = fit_modulus(&template, &avg, min_gap)?;
    let boots = bootstrap(seeds.len(), resamples, boot_seed, |idx| {
        fit_modulus(&template, &averaged(idx), min_gap)
            .map(|f| f.0)
            .unwrap_or(f64::NAN)
    });
    if boots.is_empty() {
        return Err(Error::DegenerateFit("no bootstrap resample produced a fit"));
    }
    let pairs = template
        .into_iter()
        .zip(avg)
        .map(|(p, d)| StartPair { distance: d, ..p })
        .collect();
    Ok(EnsembleModulus {
        seeds: seeds.to_vec(),
        pairs,
        eta_fit,
        x_fit,
        eta_ci: percentile_interval(&boots, 0.95),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::coefficients::{preset, PresetName, PresetParams};
    use crate::noise::{build_basis, AmplitudeRule};

    fn setup(name: PresetName, epsilon: f64) -> (Arc<NoiseBasis>, CoefficientSet, Grid) {
        let b = Arc::new(build_basis(1, 4, AmplitudeRule::default()).unwrap());
        let cs = preset(
            name,
            &PresetParams {
                epsilon,
                f1: b.f1(),
                ..Default::default()
            },
        )
        .unwrap();
        (b, cs, Grid::new(1, 64).unwrap())
    }

    fn bump(g: &Grid, a: f64, shift: f64) -> Vec<f64> {
        g.sample(|x| 1.0 + a * (2.0 * PI * (x[0] - shift)).cos())
    }

    #[test]
    fn identical_inputs_stay_identical() {
        let (b, cs, g) = setup(PresetName::DeanKawasaki, 0.1);
        let path = sample_path(b, 1e-4, 0.2, 3).unwrap();
        let r = bump(&g, 0.4, 0.0);
        let rep = contraction_report(&r, &r, &cs, g, &path, 0.2, 5e-3, 10).unwrap();
        assert!(rep.degenerate);
        assert!(rep.distance.iter().all(|&d| d == 0.0));
        assert!(rep.passed());
    }

    #[test]
    fn sine_gordon_stays_below_exponential_bound() {
        let (b, cs, g) = setup(PresetName::SineGordon, 0.05);
        let path = sample_path(b, 1e-4, 0.5, 8).unwrap();
        let rep = contraction_report(&bump(&g, 0.4, 0.0), &bump(&g, 0.3, 0.25), &cs, g, &path, 0.5, 5e-3, 100).unwrap();
        assert!(rep.passed(), "max ratio {}", rep.max_ratio);
        assert!(rep.bound.last().unwrap() > &rep.bound[0]);
    }

    #[test]
    fn restart_reproduces_trajectory() {
        let (b, cs, g) = setup(PresetName::DeanKawasaki, 0.1);
        let path = sample_path(b, 1e-4, 0.3, 21).unwrap();
        let r = bump(&g, 0.5, 0.1);
        assert_eq!(semiflow_residual(&r, 0.0, 0.0, 0.3, &cs, g, &path).unwrap(), 0.0);
        assert_eq!(semiflow_residual(&r, 0.0, 0.3, 0.3, &cs, g, &path).unwrap(), 0.0);
        assert!(semiflow_residual(&r, 0.05, 0.17, 0.3, &cs, g, &path).unwrap() < 1e-12);
        assert!(semiflow_residual(&r, 0.2, 0.1, 0.3, &cs, g, &path).is_err());
    }

    #[test]
    fn shifted_noise_reproduces_late_start() {
        let (b, cs, g) = setup(PresetName::DeanKawasaki, 0.1);
        let path = sample_path(b, 1e-4, 0.75, 5).unwrap();
        let r = bump(&g, 0.5, 0.1);
        assert_eq!(cocycle_residual(&r, 0.0, 0.5, &cs, g, &path).unwrap(), 0.0);
        assert_eq!(cocycle_residual(&r, 0.25, 0.0, &cs, g, &path).unwrap(), 0.0);
        assert!(cocycle_residual(&r, 0.25, 0.5, &cs, g, &path).unwrap() < 1e-12);
        assert!(matches!(
            cocycle_residual(&r, 0.25 + 0.3e-4, 0.5, &cs, g, &path),
            Err(Error::Misaligned { .. })
        ));
    }

    #[test]
    fn heat_modulus_is_lipschitz() {
        let (b, cs, g) = setup(PresetName::Heat, 0.0);
        let dt = 1e-5;
        let path = sample_path(b, dt, 0.012, 0).unwrap();
        let s_grid: Vec<f64> = (0..6).map(|i| i as f64 * 2e-3).collect();
        let rep = initial_time_modulus(&bump(&g, 0.5, 0.0), &s_grid, 0.012, &cs, g, &path).unwrap();
        assert!((rep.eta_fit - 1.0).abs() < 0.1, "eta {}", rep.eta_fit);
        // the deterministic oracle: sup over t is attained at the later start
        let decay = |s: f64| (-4.0 * PI * PI * s).exp();
        for p in &rep.pairs {
            let oracle = 0.5 * (1.0 - decay(p.gap())) * 2.0 / PI;
            assert!((p.distance - oracle).abs() < 0.02 * oracle, "{p:?} vs {oracle}");
        }
    }

    #[test]
    fn duplicate_starts_are_excluded_from_fit() {
        let (b, cs, g) = setup(PresetName::Heat, 0.0);
        let path = sample_path(b, 1e-4, 0.05, 0).unwrap();
        let s_grid = [0.0, 0.0, 0.01, 0.02];
        let rep = initial_time_modulus(&bump(&g, 0.5, 0.0), &s_grid, 0.05, &cs, g, &path).unwrap();
        assert_eq!(rep.pairs[0].distance, 0.0);
        assert_eq!(rep.fitted, 5);
        assert!(initial_time_modulus(&bump(&g, 0.5, 0.0), &[0.0, 0.01], 0.05, &cs, g, &path).is_err());
    }
}
