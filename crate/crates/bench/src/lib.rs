//! Shared fixtures for the kernel benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use spde_core::{build_basis, preset, AmplitudeRule, CoefficientSet, Grid, NoiseBasis, PresetName, PresetParams};

pub fn basis(dim: usize) -> Arc<NoiseBasis> {
    Arc::new(build_basis(dim, 4, AmplitudeRule::default()).expect("default basis"))
}

pub fn dean_kawasaki(basis: &NoiseBasis, epsilon: f64) -> CoefficientSet {
    let params = PresetParams {
        epsilon,
        f1: basis.f1(),
        ..Default::default()
    };
    preset(PresetName::DeanKawasaki, &params).expect("preset")
}

pub fn cosine(grid: &Grid, amplitude: f64) -> Vec<f64> {
    grid.sample(|x| 1.0 + amplitude * (2.0 * PI * x[0] / grid.length).cos())
}

/// Deterministic, well-spread scalar samples.
pub fn scalar_samples(n: usize, offset: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| vec![((i * 7919 + offset) % 1009) as f64 / 1009.0])
        .collect()
}
