//! Monte Carlo and brute-force checks of the noise basis and sampled paths.

use std::f64::consts::PI;
use std::sync::Arc;

use spde_core::noise::{build_basis, eval_constants, sample_path, shift_path, AmplitudeRule};
use spde_core::Grid;

#[test]
fn increments_have_variance_dt_and_are_uncorrelated() {
    let basis = Arc::new(build_basis(1, 2, AmplitudeRule::Flat { amplitude: 1.0 }).unwrap());
    let dt = 0.01;
    let n = 100_000;
    let path = sample_path(basis.clone(), dt, n as f64 * dt, 42).unwrap();
    assert_eq!(path.n_steps(), n);
    let nf = n as f64;
    for s in 0..basis.n_streams() {
        let x = path.stream(s);
        let mean = x.iter().sum::<f64>() / nf;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        // Var of the sample variance of N(0, σ²) is 2σ⁴/(N−1)
        let se = dt * (2.0 / (nf - 1.0)).sqrt();
        assert!((var - dt).abs() < 3.0 * se, "stream {s}: {var} vs {dt} ± {se}");
        assert!(mean.abs() < 3.0 * (dt / nf).sqrt());
    }
    let bound = 3.0 / nf.sqrt();
    for a in 0..basis.n_streams() {
        for b in a + 1..basis.n_streams() {
            let (x, y) = (path.stream(a), path.stream(b));
            let sxy: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            let sxx: f64 = x.iter().map(|p| p * p).sum();
            let syy: f64 = y.iter().map(|q| q * q).sum();
            let corr = sxy / (sxx * syy).sqrt();
            assert!(corr.abs() < bound, "streams {a}, {b}: {corr}");
        }
    }
}

#[test]
fn constants_match_fine_grid_brute_force() {
    let rule = AmplitudeRule::PowerLaw {
        gamma: 2.0,
        scale: 1.0,
        zero_mode: 0.0,
    };
    let basis = build_basis(1, 8, rule).unwrap();
    let coarse = Grid::new(1, 64).unwrap();
    let c = eval_constants(&basis, &coarse).unwrap();

    let fine = 640;
    let (mut f1, mut f3) = (0.0f64, 0.0f64);
    let mut f1_min = f64::INFINITY;
    for i in 0..fine {
        let x = (i as f64 + 0.5) / fine as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for k in 1..=8i32 {
            let lam = 1.0 / (k * k) as f64;
            let w = 2.0 * PI * k as f64;
            for sign in [-1.0, 1.0] {
                let arg = sign * w * x;
                a += 2.0 * lam * lam * (arg.sin().powi(2) + arg.cos().powi(2));
                b += 2.0 * lam * lam * w * w * (arg.cos().powi(2) + arg.sin().powi(2));
            }
        }
        f1 += a / fine as f64;
        f3 += b / fine as f64;
        f1_min = f1_min.min(a);
    }
    // ‖∇²e‖∞ by brute-force maximisation over the fine grid
    let mut f4 = 0.0;
    for m in &basis.modes {
        let k = m.wavevector[0] as f64;
        if k == 0.0 {
            continue;
        }
        let sup = (0..fine)
            .map(|i| {
                let x = i as f64 / fine as f64;
                let w = 2.0 * PI * k;
                2f64.sqrt() * w * w * (w * x).sin().abs().max((w * x).cos().abs())
            })
            .fold(0.0, f64::max);
        f4 += m.amplitude.powi(2) * sup * sup;
    }
    assert!((c.f1 - f1).abs() < 1e-12 * f1);
    assert!((f1_min - f1).abs() < 1e-12 * f1);
    assert!((c.f3 - f3).abs() < 1e-12 * f3);
    assert!((c.f4 - f4).abs() < 1e-12 * f4);
}

#[test]
fn shifted_partial_sums_agree_bitwise() {
    let basis = Arc::new(build_basis(2, 1, AmplitudeRule::default()).unwrap());
    let dt = 0.01;
    let path = sample_path(basis.clone(), dt, 2.0, 7).unwrap();
    let shifted = shift_path(&path, 0.5).unwrap();
    for s in 0..basis.n_streams() {
        // W(0.5 + t) − W(0.5) from both paths
        assert_eq!(
            path.brownian_increment(s, 50, 150),
            shifted.brownian_increment(s, 0, 100)
        );
    }
}
