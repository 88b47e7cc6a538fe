//! Two-point couplings, the deterministic flow, and proximity of noisy
//! paths to it.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::ensemble::Ensemble;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::noise::{build_basis, sample_path, AmplitudeRule, NoisePath};
use crate::solver::{check_field, solve, step_range, FvSolver, SolveOptions, Trajectory};
use crate::stats::{bootstrap, linear_fit, percentile_interval, wilson, Interval, Z95};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointStats {
    pub seeds: Vec<u64>,
    pub horizons: Vec<f64>,
    pub delta: f64,
    /// `distances[pair][h] = d(ρ¹(t_h), ρ²(t_h))`
    pub distances: Vec<Vec<f64>>,
    pub exceed: Vec<usize>,
    /// `P̂(d(t_h) > δ)`
    pub estimates: Vec<f64>,
    /// Wilson 95% intervals.
    pub intervals: Vec<Interval>,
}

impl TwoPointStats {
    pub fn n_paths(&self) -> usize {
        self.distances.len()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.estimates.windows(2).all(|w| w[1] <= w[0])
    }

    /// Wilson intervals of horizons `a` and `b` are disjoint with the
    /// estimate at `b` below the one at `a`.
    pub fn significantly_below(&self, a: usize, b: usize) -> bool {
        self.estimates[b] < self.estimates[a] && !self.intervals[a].overlaps(&self.intervals[b])
    }

    fn from_distances(seeds: Vec<u64>, horizons: Vec<f64>, delta: f64, distances: Vec<Vec<f64>>) -> Self {
        let n = distances.len();
        let exceed: Vec<usize> = (0..horizons.len())
            .map(|h| distances.iter().filter(|d| d[h] > delta).count())
            .collect();
        TwoPointStats {
            estimates: exceed.iter().map(|&k| k as f64 / n.max(1) as f64).collect(),
            intervals: exceed.iter().map(|&k| wilson(k, n, Z95)).collect(),
            seeds,
            horizons,
            delta,
            distances,
            exceed,
        }
    }
}

/// Distances at the given horizons between two solutions driven by `path`.
pub fn coupled_distances(
    rho01: &[f64],
    rho02: &[f64],
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
    horizons: &[f64],
) -> Result<Vec<f64>> {
    let marks: Vec<usize> = horizons
        .iter()
        .map(|&h| step_range(path, path.origin, h).map(|r| r.1))
        .collect::<Result<_>>()?;
    let end = marks.iter().cloned().max().unwrap_or(0);
    let mut solver = FvSolver::new(grid, cs, &path.basis, path.dt)?;
    let mut a = rho01.to_vec();
    let mut b = rho02.to_vec();
    let mut out = vec![0.0; horizons.len()];
    let record = |k: usize, a: &[f64], b: &[f64], out: &mut [f64]| {
        for (o, &m) in out.iter_mut().zip(&marks) {
            if m == k {
                *o = grid.l1_distance(a, b);
            }
        }
    };
    record(0, &a, &b, &mut out);
    for k in 0..end {
        solver.step(&mut a, path, k, k as u64)?;
        solver.step(&mut b, path, k, k as u64)?;
        record(k + 1, &a, &b, &mut out);
    }
    Ok(out)
}

/// Estimates `P(d(t) > δ)` at each horizon from one coupled pair per
/// ensemble member: shared noise within a pair, independent across pairs.
pub fn two_point_run(
    rho01: &[f64],
    rho02: &[f64],
    cs: &CoefficientSet,
    horizons: &[f64],
    delta: f64,
    ens: &Ensemble,
) -> Result<TwoPointStats> {
    check_field(&ens.grid, rho01)?;
    check_field(&ens.grid, rho02)?;
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("{delta} must be positive")));
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] < 0.0 {
        return Err(invalid("horizons", "need increasing nonnegative horizons"));
    }
    let t_max = *horizons.last().unwrap();
    let distances = ens.map(t_max, |_, path| {
        coupled_distances(rho01, rho02, cs, ens.grid, path, horizons)
    })?;
    Ok(TwoPointStats::from_distances(
        ens.seeds.clone(),
        horizons.to_vec(),
        delta,
        distances,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingFit {
    /// `α̂ = 1 − exp(slope)`
    pub alpha_hat: f64,
    /// Slope of `log P` against `√(ln t)`, an estimate of `log(1 − α)`.
    pub slope: f64,
    pub intercept: f64,
    /// Horizons entering the fit.
    pub horizons: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `exp(intercept) (1 − α̂)^{√ln t}` on the fitted horizons.
    pub rate_curve: Vec<f64>,
    /// Every estimate vanished: fully mixed before the first horizon.
    pub fully_mixed: bool,
}

/// Least squares of `log P(d > δ)` against `√(ln t)` over horizons `t > 1`
/// with positive estimates; at least four are needed.
pub fn mixing_fit_series(horizons: &[f64], estimates: &[f64]) -> Result<MixingFit> {
    if horizons.len() != estimates.len() {
        return Err(Error::DimensionMismatch {
            expected: horizons.len(),
            got: estimates.len(),
        });
    }
    if estimates.iter().all(|&p| p == 0.0) {
        return Ok(MixingFit {
            alpha_hat: 1.0,
            slope: f64::NEG_INFINITY,
            intercept: f64::NEG_INFINITY,
            horizons: Vec::new(),
            residuals: Vec::new(),
            rate_curve: Vec::new(),
            fully_mixed: true,
        });
    }
    let used: Vec<(f64, f64)> = horizons
        .iter()
        .zip(estimates)
        .filter(|(&t, &p)| t > 1.0 && p > 0.0)
        .map(|(&t, &p)| (t, p))
        .collect();
    if used.len() < 4 {
        return Err(Error::DegenerateFit(
            "fewer than four horizons beyond t = 1 with positive estimates",
        ));
    }
    let x: Vec<f64> = used.iter().map(|(t, _)| t.ln().sqrt()).collect();
    let y: Vec<f64> = used.iter().map(|(_, p)| p.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(MixingFit {
        alpha_hat: 1.0 - fit.slope.exp(),
        slope: fit.slope,
        intercept: fit.intercept,
        rate_curve: x.iter().map(|s| (fit.intercept + fit.slope * s).exp()).collect(),
        horizons: used.iter().map(|u| u.0).collect(),
        residuals: fit.residuals,
        fully_mixed: false,
    })
}

pub fn mixing_fit(stats: &TwoPointStats) -> Result<MixingFit> {
    mixing_fit_series(&stats.horizons, &stats.estimates)
}

/// Percentile bootstrap interval for `α̂` over resampled pairs.
pub fn mixing_fit_interval(stats: &TwoPointStats, resamples: usize, seed: u64) -> Result<Interval> {
    let n = stats.n_paths();
    let boots = bootstrap(n, resamples, seed, |idx| {
        let est: Vec<f64> = (0..stats.horizons.len())
            .map(|h| idx.iter().filter(|&&i| stats.distances[i][h] > stats.delta).count() as f64 / n as f64)
            .collect();
        match mixing_fit_series(&stats.horizons, &est) {
            Ok(f) if !f.fully_mixed => f.alpha_hat,
            _ => f64::NAN,
        }
    });
    if boots.is_empty() {
        return Err(Error::DegenerateFit("no bootstrap resample produced a fit"));
    }
    Ok(percentile_interval(&boots, 0.95))
}

/// A path whose increments never enter a noiseless solve.
fn silent_path(dim: usize, dt: f64, t: f64) -> Result<NoisePath> {
    let basis = Arc::new(build_basis(dim, 0, AmplitudeRule::Flat { amplitude: 0.0 })?);
    sample_path(basis, dt, t.max(dt), 0)
}

/// Trajectory of the noiseless equation (`ε = 0`).
pub fn deterministic_flow(
    rho0: &[f64],
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    dt: f64,
    opts: SolveOptions,
) -> Result<Trajectory> {
    let path = silent_path(grid.dim, dt, t)?;
    solve(rho0, 0.0, t, &cs.deterministic(), grid, &path, opts)
}

/// Smooth initial data of a common mass: cosine bumps of several
/// wavenumbers and phases, and wrapped Gaussians at several centres.
pub fn smooth_family(grid: &Grid, mass: f64, count: usize) -> Vec<Vec<f64>> {
    let l = grid.length;
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let raw: Vec<f64> = if j % 2 == 0 {
            let k = 1 + (j / 2) % 3;
            let phase = 0.37 * j as f64;
            grid.sample(|x| 1.0 + 0.6 * (2.0 * PI * k as f64 * x[0] / l + phase).cos())
        } else {
            let c = (0.13 + 0.29 * j as f64) % 1.0 * l;
            let w = 0.12 * l;
            grid.sample(|x| {
                let mut d = (x[0] - c).abs();
                d = d.min(l - d);
                0.2 + (-(d * d) / (2.0 * w * w)).exp()
            })
        };
        let m = grid.integrate(&raw);
        out.push(raw.iter().map(|v| v * mass / m).collect());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionProfile {
    pub times: Vec<f64>,
    /// `C_R(t) = max over pairs of the family of ‖u(t, ρ_a) − u(t, ρ_b)‖_{L¹}`
    pub c_r: Vec<f64>,
    /// Slope of `−log C_R` against `t` over the second half of the run.
    pub decay_rate: f64,
    /// `C_R(T) ≤ decay_tol · C_R(0)`
    pub contractive: bool,
}

/// Deterministic flow of every member of `family`, with the maximal pairwise
/// distance as a function of time.
#[allow(clippy::too_many_arguments)]
pub fn contraction_profile(
    family: &[Vec<f64>],
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    dt: f64,
    save_every: usize,
    decay_tol: f64,
) -> Result<ContractionProfile> {
    if family.len() < 2 {
        return Err(invalid("family", "need at least two initial data"));
    }
    let opts = SolveOptions {
        save_every,
        store_states: true,
    };
    let trajs: Vec<Trajectory> = family
        .iter()
        .map(|r| deterministic_flow(r, t, cs, grid, dt, opts))
        .collect::<Result<_>>()?;
    let times = trajs[0].times.clone();
    let c_r: Vec<f64> = (0..times.len())
        .map(|i| {
            let mut m: f64 = 0.0;
            for a in 0..trajs.len() {
                for b in a + 1..trajs.len() {
                    m = m.max(grid.l1_distance(&trajs[a].states[i], &trajs[b].states[i]));
                }
            }
            m
        })
        .collect();
    let half = times.len() / 2;
    let (x, y): (Vec<f64>, Vec<f64>) = times[half..]
        .iter()
        .zip(&c_r[half..])
        .filter(|(_, &c)| c > 0.0)
        .map(|(&t, &c)| (t, -c.ln()))
        .unzip();
    let decay_rate = linear_fit(&x, &y).map(|f| f.slope).unwrap_or(0.0);
    let contractive = *c_r.last().unwrap() <= decay_tol * c_r[0];
    Ok(ContractionProfile {
        times,
        c_r,
        decay_rate,
        contractive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub seeds: Vec<u64>,
    pub delta: f64,
    /// `∫₀ᵀ ‖ρ(t) − u(t)‖_{L¹} dt` per path.
    pub integrals: Vec<f64>,
    /// `P̂(∫₀ᵀ d(ρ, u) ≤ δ/2)`
    pub probability: f64,
    pub interval: Interval,
    /// Smallest `δ` at which some path qualifies: `2 min integral`.
    pub smallest_delta: f64,
}

/// Monte Carlo estimate of the probability that a noisy path stays within
/// `δ/2` of the deterministic flow in time-integrated L¹ distance.
pub fn support_proximity(
    rho0: &[f64],
    cs: &CoefficientSet,
    t: f64,
    delta: f64,
    ens: &Ensemble,
) -> Result<SupportEstimate> {
    check_field(&ens.grid, rho0)?;
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("{delta} must be positive")));
    }
    let grid = ens.grid;
    let full = SolveOptions::default();
    let u = deterministic_flow(rho0, t, cs, grid, ens.dt, full)?;
    let integrals = ens.map(t, |_, path| {
        let (k0, k1) = step_range(path, 0.0, t)?;
        let mut solver = FvSolver::new(grid, cs, &path.basis, path.dt)?;
        let mut rho = rho0.to_vec();
        let mut prev = grid.l1_distance(&rho, &u.states[0]);
        let mut acc = 0.0;
        for k in k0..k1 {
            solver.step(&mut rho, path, k, k as u64)?;
            let d = grid.l1_distance(&rho, &u.states[k + 1 - k0]);
            acc += 0.5 * path.dt * (prev + d);
            prev = d;
        }
        Ok(acc)
    })?;
    let hits = integrals.iter().filter(|&&v| v <= 0.5 * delta).count();
    let n = integrals.len();
    Ok(SupportEstimate {
        seeds: ens.seeds.clone(),
        delta,
        probability: hits as f64 / n as f64,
        interval: wilson(hits, n, Z95),
        smallest_delta: 2.0 * integrals.iter().cloned().fold(f64::INFINITY, f64::min),
        integrals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{preset, PresetName, PresetParams};
    use crate::noise::NoiseBasis;

    fn basis() -> Arc<NoiseBasis> {
        Arc::new(build_basis(1, 4, AmplitudeRule::default()).unwrap())
    }

    fn dk(epsilon: f64) -> CoefficientSet {
        preset(
            PresetName::DeanKawasaki,
            &PresetParams {
                epsilon,
                f1: basis().f1(),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn equal_data_never_exceed() {
        let g = Grid::new(1, 32).unwrap();
        let e = Ensemble::derived(g, basis(), 1e-4, 1, 8);
        let r = g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin());
        let s = two_point_run(&r, &r, &dk(0.1), &[0.0, 0.05, 0.1], 0.01, &e).unwrap();
        assert!(s.estimates.iter().all(|&p| p == 0.0));
        assert!(s.distances.iter().flatten().all(|&d| d == 0.0));
    }

    #[test]
    fn exceedance_is_nested_without_drift() {
        let g = Grid::new(1, 32).unwrap();
        let e = Ensemble::derived(g, basis(), 1e-4, 2, 16);
        let a = g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos());
        let b = g.sample(|x| 1.0 - 0.5 * (2.0 * PI * x[0]).cos());
        let horizons = [0.0, 0.01, 0.02, 0.04, 0.08];
        let s = two_point_run(&a, &b, &dk(0.1), &horizons, 0.2, &e).unwrap();
        for d in &s.distances {
            for h in 1..horizons.len() {
                assert!(d[h] <= d[h - 1] * (1.0 + 5e-3), "{d:?}");
            }
        }
        assert!(s.is_nonincreasing());
        assert_eq!(s.estimates[0], 1.0);
        assert_eq!(*s.estimates.last().unwrap(), 0.0);
        assert!(s.significantly_below(0, 4));
    }

    #[test]
    fn synthetic_rate_is_recovered() {
        let alpha: f64 = 0.3;
        let horizons: Vec<f64> = (0..8).map(|i| 1.5 * 2f64.powi(i)).collect();
        let p: Vec<f64> = horizons
            .iter()
            .map(|t| 0.9 * (1.0 - alpha).powf(t.ln().sqrt()))
            .collect();
        let f = mixing_fit_series(&horizons, &p).unwrap();
        assert!((f.alpha_hat - alpha).abs() < 1e-12);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-12));
        let flat = mixing_fit_series(&horizons, &[0.4; 8]).unwrap();
        assert!(flat.alpha_hat.abs() < 1e-12);
        assert!(mixing_fit_series(&horizons, &[0.0; 8]).unwrap().fully_mixed);
        assert!(mixing_fit_series(&horizons[..3], &p[..3]).is_err());
    }

    #[test]
    fn heat_distance_decays_at_the_spectral_gap() {
        let g = Grid::new(1, 256).unwrap();
        let heat = preset(PresetName::Heat, &PresetParams::default()).unwrap();
        let a = g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos());
        let b = g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin());
        let p = contraction_profile(&[a.clone(), b], 0.2, &heat, g, 1e-4, 10, 1e-2).unwrap();
        let gap = 4.0 * PI * PI;
        assert!((p.decay_rate - gap).abs() < 0.1 * gap, "rate {}", p.decay_rate);
        assert!(p.contractive);
        let same = contraction_profile(&[a.clone(), a], 0.01, &heat, g, 1e-4, 10, 1e-2).unwrap();
        assert!(same.c_r.iter().all(|&c| c == 0.0));
    }

    /// Newton on `Δ_h u = κ sin u` from `guess`.
    fn steady(g: &Grid, kappa: f64, mut u: Vec<f64>) -> Vec<f64> {
        let n = g.n;
        let h2 = g.h() * g.h();
        for _ in 0..60 {
            let mut a = vec![vec![0.0; n]; n];
            let mut r = vec![0.0; n];
            for i in 0..n {
                let (l, p) = ((i + n - 1) % n, (i + 1) % n);
                r[i] = (u[l] - 2.0 * u[i] + u[p]) / h2 - kappa * u[i].sin();
                a[i][l] += 1.0 / h2;
                a[i][p] += 1.0 / h2;
                a[i][i] += -2.0 / h2 - kappa * u[i].cos();
            }
            for c in 0..n {
                let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
                a.swap(c, piv);
                r.swap(c, piv);
                for row in c + 1..n {
                    let f = a[row][c] / a[c][c];
                    for col in c..n {
                        a[row][col] -= f * a[c][col];
                    }
                    r[row] -= f * r[c];
                }
            }
            let mut du = vec![0.0; n];
            for c in (0..n).rev() {
                let s: f64 = (c + 1..n).map(|k| a[c][k] * du[k]).sum();
                du[c] = (r[c] - s) / a[c][c];
            }
            u.iter_mut().zip(&du).for_each(|(x, d)| *x -= d);
        }
        u
    }

    #[test]
    fn bistable_sine_gordon_is_not_contractive() {
        let g = Grid::new(1, 32).unwrap();
        let kappa = 20.0;
        let cs = preset(
            PresetName::SineGordon,
            &PresetParams {
                kappa,
                ..Default::default()
            },
        )
        .unwrap();
        let low = steady(&g, kappa, vec![2.0 * PI + 0.2; 32]);
        let high = steady(&g, kappa, vec![4.0 * PI - 0.2; 32]);
        assert!(low.iter().all(|x| (x - 2.0 * PI).abs() < 1e-9));
        assert!(high.iter().all(|x| (x - 4.0 * PI).abs() < 1e-9));
        let a: Vec<f64> = low.iter().map(|x| x + 0.1).collect();
        let b: Vec<f64> = high.iter().map(|x| x - 0.1).collect();
        let p = contraction_profile(&[a, b], 1.0, &cs, g, 1e-4, 100, 1e-2).unwrap();
        assert!(!p.contractive);
        assert!((p.c_r.last().unwrap() - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn noiseless_paths_always_qualify() {
        let g = Grid::new(1, 32).unwrap();
        let e = Ensemble::derived(g, basis(), 1e-4, 3, 4);
        let r = g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin());
        let s = support_proximity(&r, &dk(0.0), 0.1, 1e-9, &e).unwrap();
        assert_eq!(s.probability, 1.0);
        let huge = support_proximity(&r, &dk(0.1), 0.1, 2.0 * 0.1 * 2.0 * g.integrate(&r) + 1.0, &e).unwrap();
        assert_eq!(huge.probability, 1.0);
    }

    #[test]
    fn proximity_grows_as_noise_vanishes() {
        let g = Grid::new(1, 32).unwrap();
        let e = Ensemble::derived(g, basis(), 1e-4, 4, 16);
        let r = g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin());
        let est: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&eps| support_proximity(&r, &dk(eps), 0.1, 4e-3, &e).unwrap().probability)
            .collect();
        assert!(est.windows(2).all(|w| w[1] >= w[0]), "{est:?}");
        assert!(est[2] > est[0]);
    }

    #[test]
    fn family_shares_mass() {
        let g = Grid::with_length(1, 64, 2.0 * PI).unwrap();
        let fam = smooth_family(&g, 1.0, 6);
        for f in &fam {
            assert!((g.integrate(f) - 1.0).abs() < 1e-13);
            assert!(f.iter().all(|&x| x > 0.0));
        }
    }
}
