//! Uniform periodic grid on the torus `[0, L)^d`, `d ∈ {1, 2}`.
//!
//! Cells are indexed `i + n * j`; axis 0 runs along `i`. Cell centres sit at
//! `(i + 1/2) h`. Every integral over the torus uses the cell-average rule
//! `h^d Σ`, so L¹ distances of piecewise-constant fields are exact.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn unit_length() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    /// Side length of the torus.
    #[serde(default = "unit_length")]
    pub length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        Self::with_length(dim, n, 1.0)
    }

    pub fn with_length(dim: usize, n: usize, length: f64) -> Result<Self> {
        let grid = Self { dim, n, length };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(invalid("grid.dim", format!("{} not in {{1, 2}}", self.dim)));
        }
        if self.n < 4 {
            return Err(invalid("grid.n", format!("{} cells per axis, need at least 4", self.n)));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(invalid(
                "grid.length",
                format!("{} is not a positive length", self.length),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Total volume `L^d` of the torus.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Per-axis integer coordinates of a linear cell index.
    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx % self.n, idx / self.n]
        }
    }

    #[inline]
    pub fn index(&self, c: [usize; 2]) -> usize {
        if self.dim == 1 {
            c[0]
        } else {
            c[0] + self.n * c[1]
        }
    }

    /// Neighbour of `idx` one cell in the positive direction of `axis`.
    #[inline]
    pub fn plus(&self, idx: usize, axis: usize) -> usize {
        let mut c = self.coords(idx);
        c[axis] = if c[axis] + 1 == self.n { 0 } else { c[axis] + 1 };
        self.index(c)
    }

    #[inline]
    pub fn minus(&self, idx: usize, axis: usize) -> usize {
        let mut c = self.coords(idx);
        c[axis] = if c[axis] == 0 { self.n - 1 } else { c[axis] - 1 };
        self.index(c)
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        let h = self.h();
        let c = self.coords(idx);
        let y = if self.dim == 1 { 0.0 } else { (c[1] as f64 + 0.5) * h };
        [(c[0] as f64 + 0.5) * h, y]
    }

    /// Centre of the face between `idx` and `plus(idx, axis)`.
    pub fn face(&self, idx: usize, axis: usize) -> [f64; 2] {
        let mut x = self.center(idx);
        x[axis] += 0.5 * self.h();
        x
    }

    /// Samples `f` at every cell centre.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.cells()).map(|i| f(self.center(i))).collect()
    }

    pub fn integrate(&self, v: &[f64]) -> f64 {
        self.cell_volume() * v.iter().sum::<f64>()
    }

    pub fn l1_norm(&self, v: &[f64]) -> f64 {
        self.cell_volume() * v.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn l1_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.cell_volume() * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    /// `∫ |∇u|²` from forward face differences.
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        let h = self.h();
        let mut acc = 0.0;
        for axis in 0..self.dim {
            for i in 0..u.len() {
                let d = (u[self.plus(i, axis)] - u[i]) / h;
                acc += d * d;
            }
        }
        self.cell_volume() * acc
    }

    /// `∫ |∇u|` from forward face differences (discrete total variation).
    pub fn total_variation(&self, u: &[f64]) -> f64 {
        let h = self.h();
        let mut acc = 0.0;
        for i in 0..u.len() {
            let mut sq = 0.0;
            for axis in 0..self.dim {
                let d = (u[self.plus(i, axis)] - u[i]) / h;
                sq += d * d;
            }
            acc += sq.sqrt();
        }
        self.cell_volume() * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_neighbours_wrap() {
        let g = Grid::new(2, 4).unwrap();
        assert_eq!(g.plus(3, 0), 0);
        assert_eq!(g.minus(0, 0), 3);
        assert_eq!(g.plus(12, 1), 0);
        assert_eq!(g.minus(1, 1), 13);
        for i in 0..g.cells() {
            for axis in 0..2 {
                assert_eq!(g.minus(g.plus(i, axis), axis), i);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(3, 16).is_err());
        assert!(Grid::new(1, 2).is_err());
        assert!(Grid::with_length(1, 16, 0.0).is_err());
    }

    #[test]
    fn constant_field_has_zero_energy_and_unit_mass() {
        let g = Grid::with_length(2, 8, 2.0).unwrap();
        let u = vec![0.25; g.cells()];
        assert!((g.integrate(&u) - 1.0).abs() < 1e-15);
        assert_eq!(g.dirichlet_energy(&u), 0.0);
    }
}
