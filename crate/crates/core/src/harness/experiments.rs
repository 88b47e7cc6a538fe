//! The experiment behind each command. Every function is a pure function of
//! the configuration, so replays can re-execute and compare.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use super::config::{Command, ExperimentConfig};
use super::report::{Check, Table};
use crate::coefficients::{preset, verify_assumptions, AssumptionEntry, CoefficientSet, PresetName, PresetParams};
use crate::ensemble::Ensemble;
use crate::ergodicity::{kr_distance, mixing_fit, two_point_run, EmpiricalMeasure, FeatureMap};
use crate::error::Result;
use crate::flow::{cocycle_residual, contraction_report, semiflow_residual};
use crate::grid::Grid;
use crate::noise::{build_basis, sample_path, shift_path, AmplitudeRule, NoiseBasis, NoisePath};
use crate::solver::{mass_balance_residual, solve, SolveOptions, Trajectory};

pub(crate) struct Execution {
    pub checks: Vec<Check>,
    pub tables: BTreeMap<String, Table>,
    /// Paths to persist alongside the report, in member order.
    pub paths: Vec<NoisePath>,
}

impl Execution {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            tables: BTreeMap::new(),
            paths: Vec::new(),
        }
    }

    fn table(&mut self, name: String, t: Table) {
        self.tables.insert(name, t);
    }
}

struct Setup {
    grid: Grid,
    basis: Arc<NoiseBasis>,
    cs: CoefficientSet,
    seeds: Vec<u64>,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let basis = Arc::new(cfg.basis()?);
        let cs = cfg.coefficient_set(&basis)?;
        Ok(Self {
            grid: cfg.grid,
            basis,
            cs,
            seeds: cfg.member_seeds(),
        })
    }

    /// Suffix distinguishing members when there is more than one.
    fn suffix(&self, i: usize) -> String {
        if self.seeds.len() == 1 {
            String::new()
        } else {
            format!("_{i}")
        }
    }

    fn unforced(&self) -> bool {
        self.cs.reaction.is_zero() && self.cs.nonlocal.is_zero()
    }
}

pub(crate) fn execute(cfg: &ExperimentConfig) -> Result<Execution> {
    match cfg.command {
        Command::Simulate => simulate(cfg),
        Command::Couple => couple(cfg),
        Command::Flowcheck => flowcheck(cfg),
        Command::Ergodicity => ergodicity(cfg),
        Command::CheckAssumptions => check_assumptions(cfg),
        Command::Selftest => selftest(cfg),
    }
}

fn cells(grid: &Grid) -> Vec<f64> {
    (0..grid.cells()).map(|i| i as f64).collect()
}

fn diagnostics_table(traj: &Trajectory) -> Table {
    traj.diagnostics
        .named()
        .into_iter()
        .fold(Table::new().column("time", &traj.times), |t, (name, s)| {
            t.column(name, s)
        })
}

fn simulate(cfg: &ExperimentConfig) -> Result<Execution> {
    let su = Setup::new(cfg)?;
    let rho0 = cfg.initial.field(&su.grid);
    let opts = SolveOptions {
        save_every: cfg.save_every,
        store_states: true,
    };
    let mut ex = Execution::new();
    for (i, &seed) in su.seeds.iter().enumerate() {
        let sfx = su.suffix(i);
        let path = sample_path(su.basis.clone(), cfg.dt, cfg.t, seed)?;
        let traj = solve(&rho0, 0.0, cfg.t, &su.cs, su.grid, &path, opts)?;
        let min = traj.states.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        ex.checks.push(Check::new(
            format!("positivity{sfx}"),
            min >= 0.0,
            min,
            0.0,
            format!("min rho = {min:.6e}"),
        ));
        let r = mass_balance_residual(&traj);
        if su.cs.reaction.is_zero() {
            let worst = r.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let m0 = traj.diagnostics.mass[0];
            ex.checks.push(Check::at_most(
                format!("mass_balance{sfx}"),
                worst,
                cfg.tolerances.mass * m0,
            ));
        }
        ex.table(format!("trajectory{sfx}"), diagnostics_table(&traj));
        ex.table(
            format!("mass_residual{sfx}"),
            Table::new().column("time", &traj.times).column("residual", &r),
        );
        ex.table(
            format!("final_state{sfx}"),
            Table::new().column("cell", &cells(&su.grid)).column("rho", traj.last()),
        );
        ex.paths.push(path);
    }
    Ok(ex)
}

fn couple(cfg: &ExperimentConfig) -> Result<Execution> {
    let su = Setup::new(cfg)?;
    let r1 = cfg.initial.field(&su.grid);
    let r2 = cfg.initial_alt.expect("validated").field(&su.grid);
    let tol = cfg.tolerances.contraction;
    let opts = SolveOptions {
        save_every: cfg.save_every,
        store_states: false,
    };
    let mut ex = Execution::new();
    for (i, &seed) in su.seeds.iter().enumerate() {
        let sfx = su.suffix(i);
        let path = sample_path(su.basis.clone(), cfg.dt, cfg.t, seed)?;
        let rep = contraction_report(&r1, &r2, &su.cs, su.grid, &path, cfg.t, tol, cfg.save_every)?;
        ex.checks.push(Check::new(
            format!("contraction{sfx}"),
            rep.passed(),
            rep.max_ratio,
            1.0 + tol,
            format!(
                "max d(t)/(C(t) d(0)) = {:.6}, {} violations",
                rep.max_ratio, rep.violations
            ),
        ));
        if su.unforced() {
            ex.checks.push(Check::at_most(
                format!("non_expansion{sfx}"),
                rep.max_expansion,
                1.0 + tol,
            ));
        }
        let a = solve(&r1, 0.0, cfg.t, &su.cs, su.grid, &path, opts)?;
        let b = solve(&r2, 0.0, cfg.t, &su.cs, su.grid, &path, opts)?;
        ex.table(
            format!("coupling{sfx}"),
            Table::new()
                .column("time", &rep.times)
                .column("distance", &rep.distance)
                .column("bound", &rep.bound),
        );
        ex.table(
            format!("members{sfx}"),
            Table::new()
                .column("time", &a.times)
                .column("mass_1", &a.diagnostics.mass)
                .column("entropy_1", &a.diagnostics.entropy)
                .column("mass_2", &b.diagnostics.mass)
                .column("entropy_2", &b.diagnostics.entropy),
        );
        ex.table(
            format!("final_states{sfx}"),
            Table::new()
                .column("cell", &cells(&su.grid))
                .column("rho_1", a.last())
                .column("rho_2", b.last()),
        );
        ex.paths.push(path);
    }
    Ok(ex)
}

fn flowcheck(cfg: &ExperimentConfig) -> Result<Execution> {
    let su = Setup::new(cfg)?;
    let rho0 = cfg.initial.field(&su.grid);
    let tol = cfg.tolerances.residual;
    let (shift, restart) = (cfg.flow.shift, cfg.restart_time());
    let opts = SolveOptions {
        save_every: usize::MAX,
        store_states: false,
    };
    let mut ex = Execution::new();
    let (mut semi, mut coc, mut uniq) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &seed) in su.seeds.iter().enumerate() {
        let sfx = su.suffix(i);
        let path = sample_path(su.basis.clone(), cfg.dt, cfg.t, seed)?;
        let s = semiflow_residual(&rho0, 0.0, restart, cfg.t, &su.cs, su.grid, &path)?;
        let c = cocycle_residual(&rho0, shift, cfg.t - shift, &su.cs, su.grid, &path)?;
        let first = solve(&rho0, 0.0, cfg.t, &su.cs, su.grid, &path, opts)?;
        let again = solve(&rho0, 0.0, cfg.t, &su.cs, su.grid, &path, opts)?;
        let u = su.grid.l1_distance(first.last(), again.last());
        ex.checks.push(Check::at_most(format!("semiflow{sfx}"), s, tol));
        ex.checks.push(Check::at_most(format!("cocycle{sfx}"), c, tol));
        ex.checks.push(Check::at_most(format!("uniqueness{sfx}"), u, 0.0));
        semi.push(s);
        coc.push(c);
        uniq.push(u);
        ex.paths.push(path);
    }
    let members: Vec<f64> = (0..su.seeds.len()).map(|i| i as f64).collect();
    ex.table(
        "residuals".into(),
        Table::new()
            .column("member", &members)
            .column("semiflow", &semi)
            .column("cocycle", &coc)
            .column("uniqueness", &uniq),
    );
    Ok(ex)
}

fn ergodicity(cfg: &ExperimentConfig) -> Result<Execution> {
    let su = Setup::new(cfg)?;
    let r1 = cfg.initial.field(&su.grid);
    let r2 = cfg.initial_alt.expect("validated").field(&su.grid);
    let horizons = cfg.horizons();
    let ens = Ensemble::new(su.grid, su.basis.clone(), cfg.dt, su.seeds.clone()).with_workers(cfg.workers);
    let stats = two_point_run(&r1, &r2, &su.cs, &horizons, cfg.ergodicity.delta, &ens)?;
    let mut ex = Execution::new();
    let lo: Vec<f64> = stats.intervals.iter().map(|i| i.lo).collect();
    let hi: Vec<f64> = stats.intervals.iter().map(|i| i.hi).collect();
    let exceed: Vec<f64> = stats.exceed.iter().map(|&e| e as f64).collect();
    ex.table(
        "exceedance".into(),
        Table::new()
            .column("horizon", &horizons)
            .column("estimate", &stats.estimates)
            .column("lower", &lo)
            .column("upper", &hi)
            .column("exceed", &exceed),
    );
    let distances = horizons.iter().enumerate().fold(Table::new(), |t, (j, h)| {
        let col: Vec<f64> = stats.distances.iter().map(|d| d[j]).collect();
        t.column(format!("d_{h}"), &col)
    });
    ex.table("distances".into(), distances);
    if su.unforced() {
        let rise = stats.estimates.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        ex.checks.push(Check::new(
            "nested_exceedance",
            stats.is_nonincreasing(),
            rise,
            0.0,
            format!("largest increase of P(d > delta) = {rise}"),
        ));
    }
    if let Ok(fit) = mixing_fit(&stats) {
        ex.table(
            "mixing_fit".into(),
            Table::new()
                .column("alpha_hat", &[fit.alpha_hat])
                .column("slope", &[fit.slope])
                .column("intercept", &[fit.intercept])
                .column("fully_mixed", &[fit.fully_mixed as u8 as f64]),
        );
    }
    Ok(ex)
}

fn check_assumptions(cfg: &ExperimentConfig) -> Result<Execution> {
    let basis = cfg.basis()?;
    let cs = cfg.coefficient_set(&basis)?;
    let rep = verify_assumptions(&cs, basis.f1(), cfg.assumptions.range, cfg.assumptions.samples)?;
    let mut ex = Execution::new();
    for e in &rep.entries {
        ex.checks.push(Check::new(
            e.name.clone(),
            e.satisfied,
            e.margin,
            0.0,
            format!("{} (margin {:.4e} at xi = {:.4e})", e.item, e.margin, e.worst_point),
        ));
    }
    let col = |f: fn(&AssumptionEntry) -> f64| rep.entries.iter().map(f).collect::<Vec<_>>();
    let index: Vec<f64> = (0..rep.entries.len()).map(|i| i as f64).collect();
    ex.table(
        "assumptions".into(),
        Table::new()
            .column("entry", &index)
            .column("margin", &col(|e| e.margin))
            .column("worst_point", &col(|e| e.worst_point))
            .column("satisfied", &col(|e| e.satisfied as u8 as f64)),
    );
    Ok(ex)
}

/// Small built-in problems with known answers; only the seed comes from the
/// configuration.
fn selftest(cfg: &ExperimentConfig) -> Result<Execution> {
    let mut ex = Execution::new();
    let seed = cfg.seeds.base;
    let g = Grid::new(1, 64)?;
    let basis = Arc::new(build_basis(1, 4, AmplitudeRule::default())?);

    let heat = preset(PresetName::Heat, &PresetParams::default())?;
    let (dt, t) = (1e-5, 0.01);
    let path = sample_path(basis.clone(), dt, t, seed)?;
    let rho0 = g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos());
    let out = solve(&rho0, 0.0, t, &heat, g, &path, SolveOptions::default())?;
    let decay = (-4.0 * PI * PI * t).exp();
    let exact = g.sample(|x| 1.0 + 0.5 * decay * (2.0 * PI * x[0]).cos());
    let err = out
        .last()
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ex.checks.push(Check::at_most("heat_fourier", err, 1e-3));

    let dk = preset(
        PresetName::DeanKawasaki,
        &PresetParams {
            epsilon: 0.1,
            f1: basis.f1(),
            ..Default::default()
        },
    )?;
    let path = sample_path(basis.clone(), 1e-4, 0.01, seed)?;
    let traj = solve(&rho0, 0.0, 0.01, &dk, g, &path, SolveOptions::default())?;
    let m0 = traj.diagnostics.mass[0];
    let drift = traj
        .diagnostics
        .mass
        .iter()
        .map(|m| (m - m0).abs() / m0)
        .fold(0.0, f64::max);
    ex.checks.push(Check::at_most("mass_conservation", drift, 1e-12));

    let again = sample_path(basis.clone(), 1e-4, 0.01, seed)?;
    let same = again.increments() == path.increments();
    ex.checks.push(Check::new(
        "path_determinism",
        same,
        0.0,
        0.0,
        format!("identical increments: {same}"),
    ));

    let twice = shift_path(&shift_path(&path, 3e-4)?, 2e-4)?;
    let once = shift_path(&path, 5e-4)?;
    let same = twice.increments() == once.increments();
    ex.checks.push(Check::new(
        "shift_composition",
        same,
        0.0,
        0.0,
        format!("identical increments: {same}"),
    ));

    let xs = [0.3, -1.2, 2.5, 0.0];
    let ys = [1.0, 0.4, -0.7, 3.1];
    let m = |v: &[f64]| EmpiricalMeasure::uniform(FeatureMap::Mean, v.iter().map(|&x| vec![x]).collect());
    let d = kr_distance(&m(&xs)?, &m(&ys)?)?.value;
    let (mut a, mut b) = (xs.to_vec(), ys.to_vec());
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let sorted = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum::<f64>() / a.len() as f64;
    ex.checks
        .push(Check::at_most("kr_sorted_samples", (d - sorted).abs(), 1e-12));
    Ok(ex)
}
