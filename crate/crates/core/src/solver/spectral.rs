//! Periodic FFT on the cell grid (complex transforms of real fields; 2-D by
//! row and column passes).

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

pub type C64 = Complex<f64>;

pub struct Spectral {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    transposed: Vec<C64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Clone for Spectral {
    fn clone(&self) -> Self {
        Spectral::new(self.grid)
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n);
        let inv = planner.plan_fft_inverse(grid.n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            grid,
            fwd,
            inv,
            scratch: vec![C64::default(); len],
            transposed: if grid.dim == 2 {
                vec![C64::default(); grid.cells()]
            } else {
                Vec::new()
            },
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Signed integer wavenumber of FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.grid.n;
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Per-axis signed wavenumbers of a flattened spectral index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 2] {
        let c = self.grid.coords(idx);
        [
            self.wavenumber(c[0]),
            if self.grid.dim == 2 { self.wavenumber(c[1]) } else { 0 },
        ]
    }

    /// Eigenvalues `(4/h²) Σ sin²(π k_a / n)` of `−Δ_h` (five-point / three-point).
    pub fn discrete_laplacian_symbol(&self) -> Vec<f64> {
        let h = self.grid.h();
        let n = self.grid.n as f64;
        (0..self.grid.cells())
            .map(|idx| {
                let k = self.wavevector(idx);
                (0..self.grid.dim)
                    .map(|a| 4.0 / (h * h) * (PI * k[a] as f64 / n).sin().powi(2))
                    .sum()
            })
            .collect()
    }

    fn pass(&mut self, data: &mut [C64], forward: bool) {
        let plan = if forward { &self.fwd } else { &self.inv };
        plan.process_with_scratch(data, &mut self.scratch);
        if self.grid.dim == 2 {
            let n = self.grid.n;
            for j in 0..n {
                for i in 0..n {
                    self.transposed[i * n + j] = data[j * n + i];
                }
            }
            plan.process_with_scratch(&mut self.transposed, &mut self.scratch);
            for j in 0..n {
                for i in 0..n {
                    data[j * n + i] = self.transposed[i * n + j];
                }
            }
        }
    }

    pub fn forward(&mut self, u: &[f64], out: &mut [C64]) {
        for (o, &x) in out.iter_mut().zip(u) {
            *o = C64::new(x, 0.0);
        }
        self.pass(out, true);
    }

    /// In-place inverse; returns the real part scaled by `1/cells`.
    pub fn inverse(&mut self, hat: &mut [C64], out: &mut [f64]) {
        self.pass(hat, false);
        let s = 1.0 / self.grid.cells() as f64;
        for (o, c) in out.iter_mut().zip(hat.iter()) {
            *o = c.re * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let g = Grid::new(2, 8).unwrap();
        let mut s = Spectral::new(g);
        let u: Vec<f64> = (0..g.cells()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let mut hat = vec![C64::default(); g.cells()];
        s.forward(&u, &mut hat);
        assert!((hat[0].re - u.iter().sum::<f64>()).abs() < 1e-12);
        let mut back = vec![0.0; g.cells()];
        s.inverse(&mut hat, &mut back);
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_symbol_matches_stencil() {
        let g = Grid::new(2, 8).unwrap();
        let s = Spectral::new(g);
        let sym = s.discrete_laplacian_symbol();
        // plane wave exp(2πi(k·x)) is an eigenvector of the stencil
        let k = [1usize, 3usize];
        let idx = g.index(k);
        let h = g.h();
        let lam = (2.0 - 2.0 * (2.0 * PI * k[0] as f64 / 8.0).cos() + 2.0 - 2.0 * (2.0 * PI * k[1] as f64 / 8.0).cos())
            / (h * h);
        assert!((sym[idx] - lam).abs() < 1e-9 * lam);
        assert_eq!(sym[0], 0.0);
    }
}
