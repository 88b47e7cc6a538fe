//! Time integration of the conservative SPDE and its diagnostics.

pub mod diagnostics;
pub mod fv;
pub mod galerkin;
pub mod spectral;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::noise::NoisePath;

pub use diagnostics::{entropy, entropy_density, fisher, phi_energy, Diagnostics};
pub use fv::FvSolver;
pub use galerkin::{solve_galerkin, GalerkinSolver};

/// A nonnegative cell-average field at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub grid: Grid,
    pub rho: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn new(grid: Grid, rho: Vec<f64>, time: f64) -> Result<Self> {
        check_field(&grid, &rho)?;
        Ok(Self { grid, rho, time })
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.rho)
    }
}

pub(crate) fn check_field(grid: &Grid, rho: &[f64]) -> Result<()> {
    if rho.len() != grid.cells() {
        return Err(Error::DimensionMismatch {
            expected: grid.cells(),
            got: rho.len(),
        });
    }
    if let Some(i) = rho.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(invalid(
            "rho0",
            format!("cell {i} holds {}, need finite and nonnegative", rho[i]),
        ));
    }
    Ok(())
}

/// Saved states and diagnostics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Grid,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn final_state(&self) -> State {
        State {
            grid: self.grid,
            rho: self.last().to_vec(),
            time: *self.times.last().unwrap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Save every this many steps (the final state is always saved).
    pub save_every: usize,
    /// Keep the full fields at save points, not only diagnostics.
    pub store_states: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            save_every: 1,
            store_states: true,
        }
    }
}

/// Step indices of `[s, t]` within `path`, checked for alignment and coverage.
pub fn step_range(path: &NoisePath, s: f64, t: f64) -> Result<(usize, usize)> {
    if t < s {
        return Err(invalid("T", format!("final time {t} precedes start {s}")));
    }
    let k0 = path.step_index(s)?;
    let k1 = path.step_index(t)?;
    if k1 > path.n_steps() {
        return Err(Error::PathTooShort {
            available: path.n_steps(),
            required: k1,
        });
    }
    Ok((k0, k1))
}

/// Runs `solver` on `rho` through steps `k0..k1`, calling `observe(k, rho)`
/// after each step with the index of the step just completed plus one.
pub fn advance(
    solver: &mut FvSolver,
    rho: &mut [f64],
    path: &NoisePath,
    k0: usize,
    k1: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<()> {
    for k in k0..k1 {
        solver.step(rho, path, k, k as u64)?;
        observe(k + 1, rho);
    }
    Ok(())
}

/// Solves from time `s` to time `t` with the finite-volume scheme, driven by
/// the increments of `path` on `[s, t]`.
pub fn solve(
    rho0: &[f64],
    s: f64,
    t: f64,
    cs: &CoefficientSet,
    grid: Grid,
    path: &NoisePath,
    opts: SolveOptions,
) -> Result<Trajectory> {
    let mut solver = FvSolver::new(grid, cs, &path.basis, path.dt)?;
    solve_with(&mut solver, rho0, s, t, path, opts)
}

pub fn solve_with(
    solver: &mut FvSolver,
    rho0: &[f64],
    s: f64,
    t: f64,
    path: &NoisePath,
    opts: SolveOptions,
) -> Result<Trajectory> {
    let grid = solver.grid();
    check_field(&grid, rho0)?;
    if (solver.dt() - path.dt).abs() > 1e-15 * path.dt {
        return Err(invalid(
            "dt",
            format!("solver dt {} differs from path dt {}", solver.dt(), path.dt),
        ));
    }
    if opts.save_every == 0 {
        return Err(invalid("save_every", "must be at least 1"));
    }
    let (k0, k1) = step_range(path, s, t)?;
    let cs = solver.coefficients().clone();
    let mut traj = Trajectory {
        grid,
        dt: path.dt,
        times: Vec::new(),
        states: Vec::new(),
        diagnostics: Diagnostics::default(),
    };
    let time_of = |k: usize| path.origin + k as f64 * path.dt;
    let save = |traj: &mut Trajectory, k: usize, rho: &[f64]| {
        traj.times.push(time_of(k));
        traj.diagnostics.record(&grid, &cs, rho);
        if opts.store_states || k == k1 {
            traj.states.push(rho.to_vec());
        }
    };
    let mut rho = rho0.to_vec();
    save(&mut traj, k0, &rho);
    advance(solver, &mut rho, path, k0, k1, |k, r| {
        if (k - k0) % opts.save_every == 0 || k == k1 {
            save(&mut traj, k, r);
        }
    })?;
    if !opts.store_states && traj.states.len() > 1 {
        // keep the initial and final fields only
        let last = traj.states.pop().unwrap();
        traj.states.truncate(1);
        traj.states.push(last);
    }
    Ok(traj)
}

/// One step of size `dt` from `state`; `dt` must equal the path's step.
pub fn step(state: &State, cs: &CoefficientSet, path: &NoisePath, dt: f64) -> Result<State> {
    if (dt - path.dt).abs() > 1e-15 * path.dt {
        return Err(invalid("dt", format!("{dt} differs from the path step {}", path.dt)));
    }
    let k = path.step_index(state.time)?;
    if k >= path.n_steps() {
        return Err(Error::PathTooShort {
            available: path.n_steps(),
            required: k + 1,
        });
    }
    let mut solver = FvSolver::new(state.grid, cs, &path.basis, dt)?;
    let mut rho = state.rho.clone();
    solver.step(&mut rho, path, k, k as u64)?;
    Ok(State {
        grid: state.grid,
        rho,
        time: path.origin + (k + 1) as f64 * dt,
    })
}

/// `r(t) = ‖ρ(t)‖_{L¹} − ‖ρ(0)‖_{L¹} + ∫₀ᵗ ∫ f(ρ)` with the time integral by
/// the trapezoidal rule over the saved times.
pub fn mass_balance_residual(traj: &Trajectory) -> Vec<f64> {
    let d = &traj.diagnostics;
    let m0 = d.mass[0];
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(d.mass.len());
    out.push(0.0);
    for i in 1..d.mass.len() {
        acc += 0.5 * (traj.times[i] - traj.times[i - 1]) * (d.reaction[i] + d.reaction[i - 1]);
        out.push(d.mass[i] - m0 + acc);
    }
    out
}

/// `(∫ |∇_h Φ(ρ)|² + 1)^{p/2}` at each save time.
pub fn gradient_functional(traj: &Trajectory, p: f64) -> Result<Vec<f64>> {
    if !(p >= 2.0) {
        return Err(invalid("p", format!("{p} < 2")));
    }
    Ok(traj
        .diagnostics
        .phi_energy
        .iter()
        .map(|e| (e + 1.0).powf(0.5 * p))
        .collect())
}
