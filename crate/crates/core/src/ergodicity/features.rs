//! Finite-dimensional projections of states used for empirical laws.
//!
//! Distances between laws of projected states are lower bounds on the
//! distances between the laws of the fields themselves.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    /// Spatial mean `|T|⁻¹ ∫ ρ`.
    Mean,
    /// Spatial variance `|T|⁻¹ ∫ (ρ − ρ̄)²`.
    Fluctuation,
    /// `(|T|⁻¹ ∫ ρ, |T|⁻¹ ∫ ρ²)`.
    Moments,
    /// `|ρ̂_k|` for `k = 1..=modes` along each axis.
    FourierMagnitudes { modes: usize },
    /// Averages over `blocks` equal blocks per axis.
    CoarseGrain { blocks: usize },
}

impl FeatureMap {
    pub fn dimension(&self, grid: &Grid) -> usize {
        match *self {
            FeatureMap::Mean | FeatureMap::Fluctuation => 1,
            FeatureMap::Moments => 2,
            FeatureMap::FourierMagnitudes { modes } => modes * grid.dim,
            FeatureMap::CoarseGrain { blocks } => blocks.pow(grid.dim as u32),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match *self {
            FeatureMap::FourierMagnitudes { modes } if modes == 0 || 2 * modes > grid.n => Err(invalid(
                "feature_map.modes",
                format!("{modes} not in 1..={}", grid.n / 2),
            )),
            FeatureMap::CoarseGrain { blocks } if blocks == 0 || !grid.n.is_multiple_of(blocks) => Err(invalid(
                "feature_map.blocks",
                format!("{blocks} does not divide n = {}", grid.n),
            )),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, grid: &Grid, rho: &[f64]) -> Vec<f64> {
        let cells = rho.len() as f64;
        let mean = rho.iter().sum::<f64>() / cells;
        match *self {
            FeatureMap::Mean => vec![mean],
            FeatureMap::Fluctuation => vec![rho.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / cells],
            FeatureMap::Moments => vec![mean, rho.iter().map(|x| x * x).sum::<f64>() / cells],
            FeatureMap::FourierMagnitudes { modes } => {
                let mut out = Vec::with_capacity(modes * grid.dim);
                for axis in 0..grid.dim {
                    for k in 1..=modes {
                        let (mut re, mut im) = (0.0, 0.0);
                        for (i, &r) in rho.iter().enumerate() {
                            let j = grid.coords(i)[axis] as f64;
                            let arg = 2.0 * PI * k as f64 * j / grid.n as f64;
                            re += r * arg.cos();
                            im -= r * arg.sin();
                        }
                        out.push(re.hypot(im) / cells);
                    }
                }
                out
            }
            FeatureMap::CoarseGrain { blocks } => {
                let per = grid.n / blocks;
                let mut out = vec![0.0; self.dimension(grid)];
                for (i, &r) in rho.iter().enumerate() {
                    let c = grid.coords(i);
                    let b = if grid.dim == 1 {
                        c[0] / per
                    } else {
                        (c[0] / per) * blocks + c[1] / per
                    };
                    out[b] += r;
                }
                let per_block = cells / out.len() as f64;
                out.iter_mut().for_each(|x| *x /= per_block);
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_of_a_cosine() {
        let g = Grid::new(1, 64).unwrap();
        let rho = g.sample(|x| 1.0 + 0.4 * (2.0 * PI * x[0]).cos());
        assert!((FeatureMap::Mean.apply(&g, &rho)[0] - 1.0).abs() < 1e-14);
        assert!((FeatureMap::Fluctuation.apply(&g, &rho)[0] - 0.08).abs() < 1e-14);
        let f = FeatureMap::FourierMagnitudes { modes: 2 }.apply(&g, &rho);
        assert!((f[0] - 0.2).abs() < 1e-13 && f[1].abs() < 1e-13);
        let c = FeatureMap::CoarseGrain { blocks: 2 }.apply(&g, &rho);
        assert!((c[0] + c[1] - 2.0).abs() < 1e-13);
        assert!(FeatureMap::CoarseGrain { blocks: 5 }.validate(&g).is_err());
    }

    #[test]
    fn coarse_grain_in_two_dimensions() {
        let g = Grid::new(2, 4).unwrap();
        let rho: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let f = FeatureMap::CoarseGrain { blocks: 2 }.apply(&g, &rho);
        assert_eq!(f.len(), 4);
        assert!((f.iter().sum::<f64>() / 4.0 - 7.5).abs() < 1e-14);
    }
}
