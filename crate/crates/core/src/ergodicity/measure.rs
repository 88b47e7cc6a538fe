//! Weighted empirical measures of feature vectors and their
//! Kantorovich–Rubinstein (1-Wasserstein) distance.

use serde::{Deserialize, Serialize};

use super::features::FeatureMap;
use crate::error::{invalid, Error, Result};
use crate::stats::{block_indices, quantile, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub feature: FeatureMap,
    /// Feature vectors, in sampling order.
    pub samples: Vec<Vec<f64>>,
    /// Nonnegative, summing to one.
    pub weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn uniform(feature: FeatureMap, samples: Vec<Vec<f64>>) -> Result<Self> {
        let w = 1.0 / samples.len().max(1) as f64;
        let weights = vec![w; samples.len()];
        Self::weighted(feature, samples, weights)
    }

    /// Builds a measure with the given weights, normalised to sum to one.
    pub fn weighted(feature: FeatureMap, samples: Vec<Vec<f64>>, mut weights: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample("empirical measure"));
        }
        if weights.len() != samples.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                got: weights.len(),
            });
        }
        let q = samples[0].len();
        if q == 0 {
            return Err(invalid("samples", "feature vectors are empty"));
        }
        if let Some(s) = samples.iter().find(|s| s.len() != q) {
            return Err(Error::DimensionMismatch {
                expected: q,
                got: s.len(),
            });
        }
        if samples.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("samples", "non-finite feature value"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("weights", "sum to zero"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            feature,
            samples,
            weights,
        })
    }

    pub fn point_mass(feature: FeatureMap, x: Vec<f64>) -> Result<Self> {
        Self::uniform(feature, vec![x])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    /// Mixture weighted by sample counts; uniform inputs give a uniform result.
    pub fn pooled(parts: &[EmpiricalMeasure]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptySample("measures to pool"))?;
        let total: usize = parts.iter().map(|m| m.len()).sum();
        let mut samples = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for m in parts {
            if m.feature != first.feature {
                return Err(invalid("feature_map", "pooled measures use different feature maps"));
            }
            let scale = m.len() as f64 / total as f64;
            samples.extend(m.samples.iter().cloned());
            weights.extend(m.weights.iter().map(|w| w * scale));
        }
        Self::weighted(first.feature, samples, weights)
    }

    /// Sub-measure on the given sample indices (with repetition), uniform.
    pub fn resampled(&self, idx: &[usize]) -> Result<Self> {
        Self::uniform(self.feature, idx.iter().map(|&i| self.samples[i].clone()).collect())
    }

    fn projected(&self, dir: &[f64]) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .zip(&self.weights)
            .map(|(s, &w)| (s.iter().zip(dir).map(|(a, b)| a * b).sum(), w))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrDistance {
    pub value: f64,
    /// `true` for one-dimensional features, where the value is exact; for
    /// `q > 1` it is a lower bound from projections onto fixed directions.
    pub exact: bool,
}

/// 1-Wasserstein distance of two weighted samples on the line:
/// `∫ |F₁(x) − F₂(x)| dx` over the merged support.
pub fn wasserstein_1d(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
    events.extend(a.iter().map(|&(x, w)| (x, w)));
    events.extend(b.iter().map(|&(x, w)| (x, -w)));
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut cdf_diff = 0.0;
    let mut acc = 0.0;
    for pair in events.windows(2) {
        cdf_diff += pair[0].1;
        acc += cdf_diff.abs() * (pair[1].0 - pair[0].0);
    }
    acc
}

/// Unit directions: coordinate axes, normalised pairwise sums and
/// differences, and the normalised diagonal.
fn directions(q: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..q {
        let mut e = vec![0.0; q];
        e[i] = 1.0;
        out.push(e);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..q {
        for j in i + 1..q {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; q];
                e[i] = r;
                e[j] = sign * r;
                out.push(e);
            }
        }
    }
    if q > 2 {
        out.push(vec![1.0 / (q as f64).sqrt(); q]);
    }
    out
}

/// Kantorovich–Rubinstein distance in the Euclidean metric on features.
///
/// Exact for `q = 1`; for `q > 1` the maximum over fixed directions `u` of
/// the exact distance between the projected laws, each a distance of
/// push-forwards under the 1-Lipschitz map `x ↦ u·x`.
pub fn kr_distance(mu1: &EmpiricalMeasure, mu2: &EmpiricalMeasure) -> Result<KrDistance> {
    if mu1.feature != mu2.feature {
        return Err(invalid(
            "feature_map",
            format!("{:?} vs {:?}", mu1.feature, mu2.feature),
        ));
    }
    let q = mu1.dim();
    if mu2.dim() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: mu2.dim(),
        });
    }
    let value = directions(q)
        .iter()
        .map(|u| wasserstein_1d(&mu1.projected(u), &mu2.projected(u)))
        .fold(0.0, f64::max);
    Ok(KrDistance { value, exact: q == 1 })
}

/// Upper `level` quantile of `KR(μ, μ*)` over moving-block resamples `μ*` of
/// a time-ordered sample: the distance expected from sampling noise alone.
pub fn block_noise_floor(mu: &EmpiricalMeasure, block: usize, resamples: usize, seed: u64, level: f64) -> Result<f64> {
    if resamples == 0 {
        return Err(invalid("resamples", "must be positive"));
    }
    let mut r = rng(seed);
    let mut d = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let idx = block_indices(mu.len(), block, &mut r);
        d.push(kr_distance(mu, &mu.resampled(&idx)?)?.value);
    }
    Ok(quantile(&d, level))
}

/// Two-sample bootstrap band: upper `level` quantile of the distance between
/// two samples of sizes `n1`, `n2` drawn with replacement from the pooled
/// samples, i.e. the distance seen when both laws coincide.
pub fn two_sample_band(
    mu1: &EmpiricalMeasure,
    mu2: &EmpiricalMeasure,
    resamples: usize,
    seed: u64,
    level: f64,
) -> Result<f64> {
    use rand::Rng;
    if resamples == 0 {
        return Err(invalid("resamples", "must be positive"));
    }
    let pool = EmpiricalMeasure::pooled(&[mu1.clone(), mu2.clone()])?;
    let n = pool.len();
    let mut r = rng(seed);
    let mut d = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let a: Vec<usize> = (0..mu1.len()).map(|_| r.random_range(0..n)).collect();
        let b: Vec<usize> = (0..mu2.len()).map(|_| r.random_range(0..n)).collect();
        d.push(kr_distance(&pool.resampled(&a)?, &pool.resampled(&b)?)?.value);
    }
    Ok(quantile(&d, level))
}
