//! Conservative finite-volume Euler–Maruyama scheme.
//!
//! One step builds explicit face fluxes
//! `G = Δt[−(ψ(ρ_R) − ψ(ρ_L))/h + ν(ρ_f) + B(x_f)] + √ε σ(ρ_f) ΔW(x_f)`
//! with `ρ_f` the arithmetic face average and `ψ` the part of `Φ` not treated
//! implicitly, applies the reaction, limits outgoing fluxes so no cell goes
//! negative, and then solves `(I − Δt a Δ_h) ρ = ρ*` by FFT for the linear
//! part `a·id` of `Φ`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;

use super::spectral::{Spectral, C64};
use crate::coefficients::{CoefficientSet, Nonlocal};
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::noise::{NoiseBasis, NoisePath};

#[derive(Debug, Clone)]
pub struct FvSolver {
    grid: Grid,
    cs: CoefficientSet,
    dt: f64,
    sqrt_eps: f64,
    n_streams: usize,
    /// Modes with nonzero amplitude.
    active: Vec<usize>,
    /// `face_noise[axis][a * cells + face] = λ e(x_face)` for active mode `a`.
    face_noise: Vec<Vec<f64>>,
    implicit: Option<(Spectral, Vec<f64>)>,
    flux: Vec<Vec<f64>>,
    psi: Vec<f64>,
    sink: Vec<f64>,
    dw: Vec<f64>,
    inc: Vec<f64>,
    hat: Vec<C64>,
    /// Number of steps in which the positivity limiter was active.
    pub limiter_activations: u64,
}

impl FvSolver {
    pub fn new(grid: Grid, cs: &CoefficientSet, basis: &NoiseBasis, dt: f64) -> Result<Self> {
        grid.validate()?;
        cs.validate()?;
        if basis.dim != grid.dim {
            return Err(Error::DimensionMismatch {
                expected: grid.dim,
                got: basis.dim,
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        let cells = grid.cells();
        let active: Vec<usize> = if cs.is_noiseless() {
            Vec::new()
        } else {
            (0..basis.n_modes())
                .filter(|&j| basis.modes[j].amplitude != 0.0 && !is_null_mode(basis, j))
                .collect()
        };
        let face_noise = (0..grid.dim)
            .map(|axis| {
                let mut t = Vec::with_capacity(active.len() * cells);
                for &j in &active {
                    let m = &basis.modes[j];
                    t.extend((0..cells).map(|i| m.amplitude * m.value(grid.face(i, axis), grid.length)));
                }
                t
            })
            .collect();
        let implicit = if cs.phi.linear > 0.0 {
            let sp = Spectral::new(grid);
            let sym = sp
                .discrete_laplacian_symbol()
                .into_iter()
                .map(|mu| 1.0 / (1.0 + dt * cs.phi.linear * mu))
                .collect();
            Some((sp, sym))
        } else {
            None
        };
        Ok(Self {
            grid,
            cs: cs.clone(),
            dt,
            sqrt_eps: cs.epsilon.sqrt(),
            n_streams: basis.n_streams(),
            active,
            face_noise,
            implicit,
            flux: vec![vec![0.0; cells]; grid.dim],
            psi: vec![0.0; cells],
            sink: vec![0.0; cells],
            dw: vec![0.0; cells],
            inc: vec![0.0; basis.n_streams()],
            hat: vec![C64::default(); cells],
            limiter_activations: 0,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.cs
    }

    /// Largest stable `Δt` for the explicit part of the diffusion given the
    /// current maximum of `ρ`.
    pub fn stability_limit(&self, rho_max: f64) -> f64 {
        let h = self.grid.h();
        let lip = if self.implicit.is_some() {
            self.cs.phi.extra_lip(0.0, rho_max)
        } else {
            self.cs.phi.max_deriv(rho_max)
        };
        if lip == 0.0 {
            f64::INFINITY
        } else {
            h * h / (2.0 * self.grid.dim as f64 * lip)
        }
    }

    /// Advances `rho` by one step using increment `step` of `path`;
    /// `global_step` only labels errors.
    pub fn step(&mut self, rho: &mut [f64], path: &NoisePath, step: usize, global_step: u64) -> Result<()> {
        let grid = self.grid;
        let cells = grid.cells();
        let h = grid.h();
        let dt = self.dt;
        let rho_max = rho.iter().cloned().fold(0.0, f64::max);
        let limit = self.stability_limit(rho_max);
        if dt > limit {
            return Err(Error::CflViolation {
                step: global_step,
                dt,
                limit,
            });
        }

        let implicit = self.implicit.is_some();
        for (p, &x) in self.psi.iter_mut().zip(rho.iter()) {
            *p = if implicit {
                self.cs.phi.extra_value(x)
            } else {
                self.cs.phi.value(x)
            };
        }
        let explicit_diffusion = !implicit || !self.cs.phi.is_linear();

        let noisy = !self.active.is_empty();
        if noisy {
            if self.inc.len() != path.basis.n_streams() || self.n_streams != path.basis.n_streams() {
                return Err(Error::GridMismatch("noise path basis differs from solver basis".into()));
            }
            path.step_increments(step, &mut self.inc);
        }
        let nonlocal = nonlocal_moments(&grid, &self.cs.nonlocal, rho);

        for axis in 0..grid.dim {
            if noisy {
                self.dw.iter_mut().for_each(|w| *w = 0.0);
                let table = &self.face_noise[axis];
                for (a, &j) in self.active.iter().enumerate() {
                    let db = self.inc[j * grid.dim + axis];
                    let row = &table[a * cells..(a + 1) * cells];
                    for (w, &e) in self.dw.iter_mut().zip(row) {
                        *w += e * db;
                    }
                }
            }
            let flux = &mut self.flux[axis];
            for i in 0..cells {
                let r = grid.plus(i, axis);
                let rf = 0.5 * (rho[i] + rho[r]);
                let mut drift = 0.0;
                if explicit_diffusion {
                    drift -= (self.psi[r] - self.psi[i]) / h;
                }
                drift += self.cs.nu.component(rf, axis);
                if let Some(m) = &nonlocal {
                    drift += m.face_value(&grid, i, axis);
                }
                let mut g = dt * drift;
                if noisy {
                    g += self.sqrt_eps * self.cs.sigma.value(rf) * self.dw[i];
                }
                flux[i] = g;
            }
        }

        for (s, &x) in self.sink.iter_mut().zip(rho.iter()) {
            let r = dt * self.cs.reaction.value(x);
            *s = if r > 0.0 { r.min(x) } else { r };
        }

        if self.limit_fluxes(rho) {
            self.limiter_activations += 1;
        }

        for i in 0..cells {
            let mut div = 0.0;
            for axis in 0..grid.dim {
                let l = grid.minus(i, axis);
                div += self.flux[axis][i] - self.flux[axis][l];
            }
            rho[i] -= div / h + self.sink[i];
        }

        if let Some((sp, sym)) = &mut self.implicit {
            sp.forward(rho, &mut self.hat);
            for (c, &s) in self.hat.iter_mut().zip(sym.iter()) {
                *c *= Complex::new(s, 0.0);
            }
            sp.inverse(&mut self.hat, rho);
        }

        repair_roundoff(rho);
        if rho.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: global_step });
        }
        Ok(())
    }

    /// Scales the outgoing fluxes of every cell whose outflow exceeds its
    /// content; repeats until no cell would go negative. Returns whether any
    /// flux was changed.
    fn limit_fluxes(&mut self, rho: &[f64]) -> bool {
        let grid = self.grid;
        let h = grid.h();
        let cells = grid.cells();
        let mut changed = false;
        for _ in 0..4 * cells {
            let mut any = false;
            for i in 0..cells {
                let mut out = 0.0;
                let mut net = 0.0;
                for axis in 0..grid.dim {
                    let l = grid.minus(i, axis);
                    let right = self.flux[axis][i];
                    let left = self.flux[axis][l];
                    out += right.max(0.0) + (-left).max(0.0);
                    net += right - left;
                }
                let available = (rho[i] - self.sink[i].max(0.0)) * h;
                if rho[i] - net / h - self.sink[i] >= 0.0 || out <= 0.0 {
                    continue;
                }
                let alpha = (available / out).clamp(0.0, 1.0);
                for axis in 0..grid.dim {
                    let l = grid.minus(i, axis);
                    if self.flux[axis][i] > 0.0 {
                        self.flux[axis][i] *= alpha;
                    }
                    if self.flux[axis][l] < 0.0 {
                        self.flux[axis][l] *= alpha;
                    }
                }
                any = true;
            }
            if !any {
                break;
            }
            changed = true;
        }
        changed
    }
}

/// The `k = 0` sine mode vanishes identically.
fn is_null_mode(basis: &NoiseBasis, j: usize) -> bool {
    let m = &basis.modes[j];
    m.wavevector == [0, 0] && m.phase == crate::noise::Phase::Sin
}

/// Moves roundoff-level negative values to zero, taking the deficit from the
/// largest cell so the total is unchanged.
fn repair_roundoff(rho: &mut [f64]) {
    let mut deficit = 0.0;
    for x in rho.iter_mut() {
        if *x < 0.0 {
            deficit += *x;
            *x = 0.0;
        }
    }
    if deficit < 0.0 {
        let (imax, _) = rho.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
        rho[imax] += deficit;
    }
}

/// Trigonometric moments of `ρ` for the sine kernel.
pub(crate) struct NonlocalMoments {
    beta: f64,
    c: [f64; 2],
    s: [f64; 2],
}

impl NonlocalMoments {
    /// `B_axis(x) = β ∫ sin(2π(x_a − y_a)/L) ρ(y) dy` at the face.
    #[inline]
    fn face_value(&self, grid: &Grid, i: usize, axis: usize) -> f64 {
        let x = grid.face(i, axis)[axis];
        self.value_at(grid, x, axis)
    }

    #[inline]
    pub(crate) fn value_at(&self, grid: &Grid, x: f64, axis: usize) -> f64 {
        let w = 2.0 * PI / grid.length;
        self.beta * ((w * x).sin() * self.c[axis] - (w * x).cos() * self.s[axis])
    }
}

pub(crate) fn nonlocal_moments(grid: &Grid, b: &Nonlocal, rho: &[f64]) -> Option<NonlocalMoments> {
    match *b {
        Nonlocal::Zero => None,
        Nonlocal::SineKernel { beta } => {
            let w = 2.0 * PI / grid.length;
            let vol = grid.cell_volume();
            let mut c = [0.0; 2];
            let mut s = [0.0; 2];
            for (i, &r) in rho.iter().enumerate() {
                let y = grid.center(i);
                for a in 0..grid.dim {
                    c[a] += vol * r * (w * y[a]).cos();
                    s[a] += vol * r * (w * y[a]).sin();
                }
            }
            Some(NonlocalMoments { beta, c, s })
        }
    }
}
