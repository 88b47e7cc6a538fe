//! Finite-volume against spectral Galerkin, and time-step refinement of the
//! mass balance.

use std::f64::consts::PI;
use std::sync::Arc;

use spde_core::coefficients::Phi;
use spde_core::solver::{mass_balance_residual, solve, solve_galerkin, SolveOptions};
use spde_core::{build_basis, preset, sample_path, AmplitudeRule, Grid, NoiseBasis, PresetName, PresetParams};

const T: f64 = 0.02;

fn basis() -> Arc<NoiseBasis> {
    Arc::new(build_basis(1, 4, AmplitudeRule::default()).unwrap())
}

fn l1(g: &Grid, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * g.cell_volume()
}

/// Porous-medium-type `Φ(ξ) = ξ + ξ³` without noise, `Δt ∝ h²`.
fn cubic_run(n: usize) -> (Grid, Vec<f64>, Vec<f64>) {
    let g = Grid::new(1, n).unwrap();
    let mut cs = preset(PresetName::Heat, &PresetParams::default()).unwrap();
    cs.phi = Phi::cubic(1.0);
    cs.growth_exponent = 3.0;
    let h = 1.0 / n as f64;
    let steps = (T * 16.0 / (h * h)).ceil();
    let dt = T / steps;
    let path = sample_path(basis(), dt, T, 0).unwrap();
    let rho0 = g.sample(|x| 1.0 + 0.4 * (2.0 * PI * x[0]).cos() + 0.2 * (4.0 * PI * x[0]).sin());
    let opts = SolveOptions {
        save_every: usize::MAX,
        store_states: false,
    };
    let fv = solve(&rho0, 0.0, T, &cs, g, &path, opts).unwrap().last().to_vec();
    let gal = solve_galerkin(&rho0, T, &cs, g, &path, n / 4, opts)
        .unwrap()
        .last()
        .to_vec();
    (g, fv, gal)
}

fn restrict(fine: &[f64]) -> Vec<f64> {
    fine.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

#[test]
fn finite_volume_and_galerkin_converge_together() {
    let runs: Vec<_> = [32, 64, 128].into_iter().map(cubic_run).collect();
    let gaps: Vec<f64> = runs.iter().map(|(g, fv, gal)| l1(g, fv, gal)).collect();
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
    assert!(gaps[2] < 1e-3, "{gaps:?}");

    let self_err: Vec<f64> = runs
        .windows(2)
        .map(|w| l1(&w[0].0, &w[0].1, &restrict(&w[1].1)))
        .collect();
    let order = (self_err[0] / self_err[1]).log2();
    assert!(order >= 1.0, "errors {self_err:?}, order {order}");
}

#[test]
fn sine_gordon_mass_residual_halves_with_the_step() {
    let g = Grid::new(1, 64).unwrap();
    let b = basis();
    let params = PresetParams {
        epsilon: 0.01,
        f1: b.f1(),
        ..Default::default()
    };
    let cs = preset(PresetName::SineGordon, &params).unwrap();
    let rho0 = g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos());
    let worst = |dt: f64| {
        let path = sample_path(b.clone(), dt, 0.5, 3).unwrap();
        let traj = solve(
            &rho0,
            0.0,
            0.5,
            &cs,
            g,
            &path,
            SolveOptions {
                save_every: 1,
                store_states: false,
            },
        )
        .unwrap();
        mass_balance_residual(&traj).iter().map(|r| r.abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (worst(1e-4), worst(5e-5));
    let ratio = coarse / fine;
    assert!((1.8..=2.2).contains(&ratio), "{coarse} / {fine} = {ratio}");
}
