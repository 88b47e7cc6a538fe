//! Projected Galerkin scheme for `v = Φ(ρ)`:
//!
//! `dv = Π_N Φ'(ρ)(ΔΦ(ρ) − ∇·(ν(ρ) + B(ρ)) − f(ρ) − √ε ∇·(σ(ρ) dξ))
//!       + ½ ε Π_N Φ''(ρ) Σ_k |∇·(σ(ρ) λ_k e_k)|²`,  `ρ = Φ⁻¹(v)`,
//!
//! on Fourier modes `|k|_∞ ≤ N`, with `Φ` extended oddly to negative values.
//! The stiff part `c Δv`, `c = Φ'(mean ρ₀)`, is integrated exactly (Lawson
//! integrating factor); everything else is Euler–Maruyama. Nonlinear terms
//! are evaluated pseudo-spectrally at the cell centres.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;

use super::diagnostics::Diagnostics;
use super::fv::nonlocal_moments;
use super::spectral::{Spectral, C64};
use super::{check_field, step_range, SolveOptions, Trajectory};
use crate::coefficients::CoefficientSet;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::noise::{NoiseBasis, NoisePath, Phase};

#[derive(Debug, Clone)]
pub struct GalerkinSolver {
    grid: Grid,
    cs: CoefficientSet,
    dt: f64,
    n_modes: usize,
    sp: Spectral,
    /// Retained-mode indicator.
    mask: Vec<bool>,
    /// `(2π/L) k` per axis for every spectral index.
    wave: Vec<[f64; 2]>,
    /// `e^{−c |2πk/L|² Δt}` on retained modes.
    lawson: Vec<f64>,
    c: f64,
    sqrt_eps: f64,
    active: Vec<usize>,
    /// `λ e(x)` at the centres for each active mode.
    centre_noise: Vec<f64>,
    /// `λ ∂_a e(x)` at the centres for each active mode and axis.
    centre_grad: Vec<Vec<f64>>,
    inc: Vec<f64>,
    v: Vec<f64>,
    rho: Vec<f64>,
    vhat: Vec<C64>,
    work: Vec<C64>,
    acc: Vec<C64>,
    buf: Vec<f64>,
    grad_v: Vec<Vec<f64>>,
    lap_v: Vec<f64>,
}

impl GalerkinSolver {
    /// Projects `Φ(ρ₀)` onto the retained modes.
    pub fn new(
        grid: Grid,
        cs: &CoefficientSet,
        basis: &NoiseBasis,
        dt: f64,
        n_modes: usize,
        rho0: &[f64],
    ) -> Result<Self> {
        grid.validate()?;
        cs.validate()?;
        check_field(&grid, rho0)?;
        if basis.dim != grid.dim {
            return Err(Error::DimensionMismatch {
                expected: grid.dim,
                got: basis.dim,
            });
        }
        if n_modes == 0 || n_modes > grid.n / 2 {
            return Err(invalid("n_modes", format!("{n_modes} not in 1..={}", grid.n / 2)));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        let cells = grid.cells();
        let sp = Spectral::new(grid);
        let w0 = 2.0 * PI / grid.length;
        let mut mask = Vec::with_capacity(cells);
        let mut wave = Vec::with_capacity(cells);
        for idx in 0..cells {
            let k = sp.wavevector(idx);
            let keep = k[0].unsigned_abs() as usize <= n_modes && k[1].unsigned_abs() as usize <= n_modes;
            // the Nyquist mode has no well-defined first derivative
            let nyquist = (0..grid.dim).any(|a| 2 * k[a].unsigned_abs() as usize == grid.n);
            mask.push(keep && !nyquist);
            wave.push([w0 * k[0] as f64, w0 * k[1] as f64]);
        }
        let mean = grid.integrate(rho0) / grid.volume();
        let c = cs.phi.deriv(mean);
        let lawson = wave
            .iter()
            .map(|w| (-c * (w[0] * w[0] + w[1] * w[1]) * dt).exp())
            .collect();
        let active: Vec<usize> = if cs.is_noiseless() {
            Vec::new()
        } else {
            (0..basis.n_modes())
                .filter(|&j| {
                    let m = &basis.modes[j];
                    m.amplitude != 0.0 && !(m.wavevector == [0, 0] && m.phase == Phase::Sin)
                })
                .collect()
        };
        let mut centre_noise = Vec::with_capacity(active.len() * cells);
        let mut centre_grad = vec![Vec::with_capacity(active.len() * cells); grid.dim];
        for &j in &active {
            let m = &basis.modes[j];
            for i in 0..cells {
                let x = grid.center(i);
                centre_noise.push(m.amplitude * m.value(x, grid.length));
                let g = m.gradient(x, grid.length);
                for (a, cg) in centre_grad.iter_mut().enumerate() {
                    cg.push(m.amplitude * g[a]);
                }
            }
        }
        let mut s = Self {
            grid,
            cs: cs.clone(),
            dt,
            n_modes,
            sp,
            mask,
            wave,
            lawson,
            c,
            sqrt_eps: cs.epsilon.sqrt(),
            active,
            centre_noise,
            centre_grad,
            inc: vec![0.0; basis.n_streams()],
            v: vec![0.0; cells],
            rho: rho0.to_vec(),
            vhat: vec![C64::default(); cells],
            work: vec![C64::default(); cells],
            acc: vec![C64::default(); cells],
            buf: vec![0.0; cells],
            grad_v: vec![vec![0.0; cells]; grid.dim],
            lap_v: vec![0.0; cells],
        };
        for (b, &r) in s.buf.iter_mut().zip(rho0) {
            *b = s.cs.phi.value(r);
        }
        s.sp.forward(&s.buf, &mut s.vhat);
        s.project_vhat();
        s.sync_fields()?;
        Ok(s)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Lawson constant `c = Φ'(mean ρ₀)`.
    pub fn lawson_constant(&self) -> f64 {
        self.c
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Unnormalised DFT coefficients of `v` (zero off the retained modes).
    pub fn spectrum(&self) -> &[C64] {
        &self.vhat
    }

    fn project_vhat(&mut self) {
        for (c, &keep) in self.vhat.iter_mut().zip(&self.mask) {
            if !keep {
                *c = C64::default();
            }
        }
    }

    /// Recomputes `v` and `ρ = Φ⁻¹(v)` from `v̂`.
    fn sync_fields(&mut self) -> Result<()> {
        self.work.copy_from_slice(&self.vhat);
        self.sp.inverse(&mut self.work, &mut self.v);
        for (r, &v) in self.rho.iter_mut().zip(&self.v) {
            *r = self.cs.phi.inverse_near(v, *r)?;
        }
        Ok(())
    }

    /// Inverse transform of `v̂ · m(k)` into `out`.
    fn apply_symbol(&mut self, symbol: impl Fn(&[f64; 2]) -> C64, out_field: usize) {
        for ((w, &v), k) in self.work.iter_mut().zip(&self.vhat).zip(&self.wave) {
            *w = v * symbol(k);
        }
        let out = if out_field < self.grid.dim {
            &mut self.grad_v[out_field]
        } else {
            &mut self.lap_v
        };
        self.sp.inverse(&mut self.work, out);
    }

    /// Adds `Σ_a ∂_a g_a` (spectral) of the pointwise fields produced by
    /// `field(axis, out)` into `self.acc` with weight `scale`.
    fn add_divergence(&mut self, scale: f64, mut field: impl FnMut(&Self, usize, &mut [f64])) {
        let mut tmp = vec![0.0; self.grid.cells()];
        let mut hat = vec![C64::default(); self.grid.cells()];
        for axis in 0..self.grid.dim {
            field(self, axis, &mut tmp);
            self.sp.forward(&tmp, &mut hat);
            for ((a, h), k) in self.acc.iter_mut().zip(&hat).zip(&self.wave) {
                *a += *h * Complex::new(0.0, k[axis] * scale);
            }
        }
    }

    pub fn step(&mut self, path: &NoisePath, step: usize, global_step: u64) -> Result<()> {
        let grid = self.grid;
        let cells = grid.cells();
        let dim = grid.dim;
        let dt = self.dt;
        let noisy = !self.active.is_empty();
        if noisy {
            path.step_increments(step, &mut self.inc);
        }

        for axis in 0..dim {
            self.apply_symbol(|k| Complex::new(0.0, k[axis]), axis);
        }
        self.apply_symbol(|k| Complex::new(-(k[0] * k[0] + k[1] * k[1]), 0.0), dim);

        // spectral divergence of the first-order fluxes and of the noise flux,
        // each later multiplied pointwise by Φ'(ρ)
        self.acc.iter_mut().for_each(|a| *a = C64::default());
        let has_flux = !self.cs.nu.is_zero() || !self.cs.nonlocal.is_zero();
        let mut flux_div = vec![0.0; cells];
        if has_flux {
            let moments = nonlocal_moments(
                &grid,
                &self.cs.nonlocal,
                &self.rho.iter().map(|r| r.max(0.0)).collect::<Vec<_>>(),
            );
            self.add_divergence(1.0, |s, axis, out| {
                for (i, o) in out.iter_mut().enumerate() {
                    let r = s.rho[i].max(0.0);
                    let mut val = s.cs.nu.component(r, axis);
                    if let Some(m) = &moments {
                        val += m.value_at(&s.grid, s.grid.center(i)[axis], axis);
                    }
                    *o = val;
                }
            });
            self.work.copy_from_slice(&self.acc);
            self.sp.inverse(&mut self.work, &mut flux_div);
            self.acc.iter_mut().for_each(|a| *a = C64::default());
        }
        let mut noise_div = vec![0.0; cells];
        if noisy {
            let inc = self.inc.clone();
            self.add_divergence(1.0, |s, axis, out| {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (a, &j) in s.active.iter().enumerate() {
                    let db = inc[j * dim + axis];
                    let row = &s.centre_noise[a * cells..(a + 1) * cells];
                    for (o, &e) in out.iter_mut().zip(row) {
                        *o += e * db;
                    }
                }
                for (o, &r) in out.iter_mut().zip(&s.rho) {
                    *o *= s.cs.sigma.value(r.max(0.0));
                }
            });
            self.work.copy_from_slice(&self.acc);
            self.sp.inverse(&mut self.work, &mut noise_div);
        }

        // pointwise increment of v (without the c Δv part)
        for i in 0..cells {
            let r = self.rho[i];
            let rp = r.max(0.0);
            let d1 = self.cs.phi.deriv(r);
            let lap = self.lap_v[i];
            let mut drift = d1 * (lap - flux_div[i] - self.cs.reaction.value(rp)) - self.c * lap;
            if noisy {
                let d2 = self.cs.phi.second(r);
                if d2 != 0.0 {
                    let sig = self.cs.sigma.value(rp);
                    let dsig = self.cs.sigma.deriv(rp);
                    let mut s = 0.0;
                    for a in 0..self.active.len() {
                        let e = self.centre_noise[a * cells + i];
                        for axis in 0..dim {
                            let drho = self.grad_v[axis][i] / d1;
                            let t = dsig * drho * e + sig * self.centre_grad[axis][a * cells + i];
                            s += t * t;
                        }
                    }
                    drift += 0.5 * self.cs.epsilon * d2 * s;
                }
            }
            let mut dv = dt * drift;
            if noisy {
                dv -= self.sqrt_eps * d1 * noise_div[i];
            }
            self.buf[i] = dv;
        }
        let mut inc_hat = vec![C64::default(); cells];
        self.sp.forward(&self.buf, &mut inc_hat);
        for (((v, d), &l), &keep) in self.vhat.iter_mut().zip(&inc_hat).zip(&self.lawson).zip(&self.mask) {
            *v = if keep { (*v + *d) * l } else { C64::default() };
        }
        self.sync_fields()?;
        if self.v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: global_step });
        }
        Ok(())
    }
}

/// Galerkin solve from the path origin to time `t`.
pub fn solve_galerkin(
    rho0: &[f64],
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
    n_modes: usize,
    opts: SolveOptions,
) -> Result<Trajectory> {
    if opts.save_every == 0 {
        return Err(invalid("save_every", "must be at least 1"));
    }
    let (k0, k1) = step_range(path, path.origin, t)?;
    let mut g = GalerkinSolver::new(grid, cs, &path.basis, path.dt, n_modes, rho0)?;
    let mut traj = Trajectory {
        grid,
        dt: path.dt,
        times: Vec::new(),
        states: Vec::new(),
        diagnostics: Diagnostics::default(),
    };
    let save = |traj: &mut Trajectory, k: usize, rho: &[f64]| {
        traj.times.push(path.origin + k as f64 * path.dt);
        traj.diagnostics.record(&grid, cs, rho);
        if opts.store_states || k == k1 || k == k0 {
            traj.states.push(rho.to_vec());
        }
    };
    save(&mut traj, k0, g.rho());
    for k in k0..k1 {
        g.step(path, k, k as u64)?;
        if (k + 1 - k0) % opts.save_every == 0 || k + 1 == k1 {
            save(&mut traj, k + 1, g.rho());
        }
    }
    Ok(traj)
}
