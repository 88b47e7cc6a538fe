//! Ensemble monitors for the entropy-dissipation estimate
//! `sup_t E Ψ₁(ρ(t)) + E ∫₀ᵀ Ψ₂(ρ) ≤ C (T + Ψ₁(ρ0))` and for the gradient
//! functional `E(∫|∇Φ(ρ)|² + 1)^{p/2}`.

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::ensemble::Ensemble;
use crate::error::{invalid, Error, Result};
use crate::solver::{check_field, entropy, gradient_functional, Trajectory};
use crate::stats::linear_fit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub seeds: Vec<u64>,
    pub times: Vec<f64>,
    /// `E Ψ₁(ρ(t))` with `Ψ₁ = ∫ (ρ log ρ − ρ + 1)`.
    pub mean_entropy: Vec<f64>,
    /// `E Ψ₂(ρ(t))` with `Ψ₂ = ∫ |∇√ρ|²`.
    pub mean_fisher: Vec<f64>,
    /// `E ∫₀ᵗ Ψ₂`, trapezoidal in time.
    pub fisher_integral: Vec<f64>,
    pub initial_entropy: f64,
}

impl DissipationReport {
    /// Smallest `C` with `sup_{r≤t} EΨ₁ + E∫₀ᵗΨ₂ ≤ C(t + Ψ₁(ρ0))` at every
    /// saved `t ∈ (0, horizon]`.
    pub fn fitted_constant(&self, horizon: f64) -> f64 {
        let mut sup = self.mean_entropy[0];
        let mut c: f64 = 0.0;
        for i in 1..self.times.len() {
            if self.times[i] > horizon * (1.0 + 1e-12) {
                break;
            }
            sup = sup.max(self.mean_entropy[i]);
            let lhs = sup + self.fisher_integral[i];
            let rhs = self.times[i] + self.initial_entropy;
            if rhs > 0.0 {
                c = c.max(lhs / rhs);
            }
        }
        c
    }

    /// `sup_{t≤T} E Ψ₁ + E ∫₀ᵀ Ψ₂`.
    pub fn left_side(&self, horizon: f64) -> f64 {
        let mut sup = self.mean_entropy[0];
        let mut last = 0.0;
        for i in 0..self.times.len() {
            if self.times[i] > horizon * (1.0 + 1e-12) {
                break;
            }
            sup = sup.max(self.mean_entropy[i]);
            last = self.fisher_integral[i];
        }
        sup + last
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

fn ensemble_mean(trajs: &[Trajectory], series: impl Fn(&Trajectory) -> &[f64]) -> Vec<f64> {
    let n = trajs.len() as f64;
    let len = series(&trajs[0]).len();
    (0..len)
        .map(|i| trajs.iter().map(|t| series(t)[i]).sum::<f64>() / n)
        .collect()
}

/// Runs the ensemble to `t` and records the mean dissipation functionals.
pub fn dissipation_check(
    cs: &CoefficientSet,
    rho0: &[f64],
    t: f64,
    ens: &Ensemble,
    save_every: usize,
) -> Result<DissipationReport> {
    check_field(&ens.grid, rho0)?;
    if ens.is_empty() {
        return Err(Error::EmptySample("seeds"));
    }
    let trajs = ens.trajectories(rho0, cs, t, save_every)?;
    let times = trajs[0].times.clone();
    let mean_entropy = ensemble_mean(&trajs, |tr| &tr.diagnostics.entropy);
    let mean_fisher = ensemble_mean(&trajs, |tr| &tr.diagnostics.fisher);
    let mut fisher_integral = vec![0.0; times.len()];
    for i in 1..times.len() {
        fisher_integral[i] =
            fisher_integral[i - 1] + 0.5 * (times[i] - times[i - 1]) * (mean_fisher[i] + mean_fisher[i - 1]);
    }
    Ok(DissipationReport {
        seeds: ens.seeds.clone(),
        times,
        mean_entropy,
        mean_fisher,
        fisher_integral,
        initial_entropy: entropy(&ens.grid, rho0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationSweep {
    pub horizons: Vec<f64>,
    pub constants: Vec<f64>,
    /// `max C / min C` over the horizons.
    pub spread: f64,
    /// Slope of `log(left side)` against `log T`.
    pub growth_exponent: f64,
    /// Left side grows faster than linearly in `T` (exponent above 1.1).
    pub superlinear: bool,
    pub report: DissipationReport,
}

impl DissipationSweep {
    pub fn stable_within(&self, factor: f64) -> bool {
        self.spread <= factor
    }
}

/// Fitted constants for several horizons. Paths for a shorter horizon are
/// prefixes of the longer ones, so one run to the largest horizon serves all.
pub fn dissipation_sweep(
    cs: &CoefficientSet,
    rho0: &[f64],
    horizons: &[f64],
    ens: &Ensemble,
    save_every: usize,
) -> Result<DissipationSweep> {
    if horizons.len() < 2 || horizons.iter().any(|&h| !(h > 0.0)) {
        return Err(invalid("horizons", "need at least two positive horizons"));
    }
    let t_max = horizons.iter().cloned().fold(0.0, f64::max);
    let report = dissipation_check(cs, rho0, t_max, ens, save_every)?;
    for &h in horizons {
        if !report.times.iter().any(|&t| (t - h).abs() <= 1e-9 * h.max(1.0)) {
            return Err(invalid("horizons", format!("{h} is not a save time")));
        }
    }
    let constants: Vec<f64> = horizons.iter().map(|&h| report.fitted_constant(h)).collect();
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().cloned().fold(0.0, f64::max);
    let spread = if hi == 0.0 { 1.0 } else { hi / lo };
    let lhs: Vec<f64> = horizons.iter().map(|&h| report.left_side(h)).collect();
    let growth_exponent = if lhs.iter().all(|&v| v > 0.0) {
        let x: Vec<f64> = horizons.iter().map(|h| h.ln()).collect();
        let y: Vec<f64> = lhs.iter().map(|v| v.ln()).collect();
        linear_fit(&x, &y)?.slope
    } else {
        0.0
    };
    Ok(DissipationSweep {
        horizons: horizons.to_vec(),
        constants,
        spread,
        growth_exponent,
        superlinear: growth_exponent > 1.1,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub seeds: Vec<u64>,
    pub p: f64,
    pub times: Vec<f64>,
    /// `E(∫|∇Φ(ρ)|² + 1)^{p/2}`
    pub mean_series: Vec<f64>,
    pub initial: f64,
    pub sup_mean: f64,
    /// `sup_t E(…) / (initial + 1)`
    pub c_fit: f64,
    /// Largest value along any single path.
    pub max_path_value: f64,
    /// Some member produced a non-finite field or functional.
    pub blowup: bool,
}

pub fn gradient_monitor(
    cs: &CoefficientSet,
    rho0: &[f64],
    t: f64,
    p: f64,
    ens: &Ensemble,
    save_every: usize,
) -> Result<GradientReport> {
    check_field(&ens.grid, rho0)?;
    if ens.is_empty() {
        return Err(Error::EmptySample("seeds"));
    }
    let outcomes = ens.map(t, |_, path| {
        let opts = crate::solver::SolveOptions {
            save_every,
            store_states: false,
        };
        match crate::solver::solve(rho0, 0.0, t, cs, ens.grid, path, opts) {
            Ok(tr) => Ok(Some(
                gradient_functional(&tr, p)?
                    .into_iter()
                    .zip(tr.times)
                    .collect::<Vec<_>>(),
            )),
            Err(Error::NonFinite { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let blowup = outcomes
        .iter()
        .any(|o| o.as_ref().is_none_or(|s| s.iter().any(|v| !v.0.is_finite())));
    let finite: Vec<&Vec<(f64, f64)>> = outcomes.iter().flatten().collect();
    if finite.is_empty() {
        return Err(Error::NonFinite { step: 0 });
    }
    let times: Vec<f64> = finite[0].iter().map(|v| v.1).collect();
    let mean_series: Vec<f64> = (0..times.len())
        .map(|i| finite.iter().map(|s| s[i].0).sum::<f64>() / finite.len() as f64)
        .collect();
    let initial = mean_series[0];
    let sup_mean = mean_series.iter().cloned().fold(0.0, f64::max);
    Ok(GradientReport {
        seeds: ens.seeds.clone(),
        p,
        times,
        c_fit: sup_mean / (initial + 1.0),
        max_path_value: finite.iter().flat_map(|s| s.iter().map(|v| v.0)).fold(0.0, f64::max),
        mean_series,
        initial,
        sup_mean,
        blowup,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::coefficients::{preset, PresetName, PresetParams};
    use crate::grid::Grid;
    use crate::noise::{build_basis, AmplitudeRule};

    fn ens(n: usize) -> Ensemble {
        let b = Arc::new(build_basis(1, 4, AmplitudeRule::default()).unwrap());
        Ensemble::derived(Grid::new(1, 64).unwrap(), b, 1e-4, 9, n)
    }

    #[test]
    fn uniform_state_has_no_dissipation() {
        let e = ens(1);
        let cs = preset(PresetName::Heat, &PresetParams::default()).unwrap();
        let r = dissipation_check(&cs, &[1.0; 64], 0.1, &e, 10).unwrap();
        assert!(r.mean_entropy.iter().all(|&v| v.abs() < 1e-15));
        assert!(r.mean_fisher.iter().all(|&v| v == 0.0));
        assert_eq!(r.fitted_constant(0.1), 0.0);
    }

    #[test]
    fn heat_entropy_decreases() {
        let e = ens(1);
        let cs = preset(PresetName::Heat, &PresetParams::default()).unwrap();
        let rho0 = e.grid.sample(|x| 1.0 + 0.8 * (2.0 * PI * x[0]).sin());
        let r = dissipation_check(&cs, &rho0, 0.1, &e, 5).unwrap();
        assert!(r.mean_entropy.windows(2).all(|w| w[1] <= w[0]));
        assert!((r.mean_entropy[0] - r.initial_entropy).abs() < 1e-15);
        // Ψ₁ decay is bounded by the dissipation ∫Ψ₂ (up to the factor 4 of ∫|∇ρ|²/ρ)
        let drop = r.mean_entropy[0] - r.mean_entropy.last().unwrap();
        assert!(drop <= 4.0 * r.fisher_integral.last().unwrap() * 1.05);
    }

    #[test]
    fn sweep_reports_constants_per_horizon() {
        let e = ens(4);
        let cs = preset(
            PresetName::DeanKawasaki,
            &PresetParams {
                epsilon: 0.01,
                f1: e.basis.f1(),
                ..Default::default()
            },
        )
        .unwrap();
        let rho0 = e.grid.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos());
        let s = dissipation_sweep(&cs, &rho0, &[0.05, 0.1, 0.2], &e, 10).unwrap();
        assert_eq!(s.constants.len(), 3);
        assert!(s.constants.windows(2).all(|w| w[1] >= w[0]));
        assert!(!s.superlinear);
        assert!(dissipation_sweep(&cs, &rho0, &[0.1], &e, 10).is_err());
    }

    #[test]
    fn constant_state_gradient_functional_is_one() {
        let e = ens(2);
        let cs = preset(PresetName::Heat, &PresetParams::default()).unwrap();
        let g = gradient_monitor(&cs, &[0.5; 64], 0.05, 2.0, &e, 10).unwrap();
        assert!(g.mean_series.iter().all(|&v| v == 1.0));
        assert!(!g.blowup);
        assert_eq!(g.c_fit, 0.5);
    }
}
