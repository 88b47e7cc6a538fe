//! Experiment configuration: one self-contained description of a run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coefficients::{preset, CoefficientSet, PresetName, PresetParams, Reaction, Sigma};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::noise::{aligned_steps, build_basis, AmplitudeRule, NoiseBasis};
use crate::solver::FvSolver;
use crate::stats::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Couple,
    Flowcheck,
    Ergodicity,
    CheckAssumptions,
    Selftest,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::Couple,
        Command::Flowcheck,
        Command::Ergodicity,
        Command::CheckAssumptions,
        Command::Selftest,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Couple => "couple",
            Command::Flowcheck => "flowcheck",
            Command::Ergodicity => "ergodicity",
            Command::CheckAssumptions => "check-assumptions",
            Command::Selftest => "selftest",
        }
    }

    fn runs_solver(&self) -> bool {
        !matches!(self, Command::CheckAssumptions | Command::Selftest)
    }

    fn needs_pair(&self) -> bool {
        matches!(self, Command::Couple | Command::Ergodicity)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(vec![format!("command: unknown command `{s}`")]))
    }
}

/// Initial density, a function of the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Constant {
        value: f64,
    },
    /// `mean (1 + amplitude cos(2π mode x₁ / L))`
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "first_mode")]
        mode: u32,
    },
    /// `mean (1 + amplitude sin(2π mode x₁ / L))`
    Sine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "first_mode")]
        mode: u32,
    },
}

fn first_mode() -> u32 {
    1
}

impl InitialData {
    pub fn field(&self, grid: &Grid) -> Vec<f64> {
        let w = |mode: u32| 2.0 * std::f64::consts::PI * mode as f64 / grid.length;
        match *self {
            InitialData::Constant { value } => vec![value; grid.cells()],
            InitialData::Cosine { mean, amplitude, mode } => {
                grid.sample(|x| mean * (1.0 + amplitude * (w(mode) * x[0]).cos()))
            }
            InitialData::Sine { mean, amplitude, mode } => {
                grid.sample(|x| mean * (1.0 + amplitude * (w(mode) * x[0]).sin()))
            }
        }
    }

    /// Upper bound of the field.
    pub fn max(&self) -> f64 {
        match *self {
            InitialData::Constant { value } => value,
            InitialData::Cosine { mean, amplitude, .. } | InitialData::Sine { mean, amplitude, .. } => {
                mean * (1.0 + amplitude.abs())
            }
        }
    }

    fn problems(&self, field: &str, out: &mut Vec<String>) {
        match *self {
            InitialData::Constant { value } => {
                if !(value.is_finite() && value >= 0.0) {
                    out.push(format!("{field}.value: {value} must be finite and nonnegative"));
                }
            }
            InitialData::Cosine { mean, amplitude, .. } | InitialData::Sine { mean, amplitude, .. } => {
                if !(mean.is_finite() && mean > 0.0) {
                    out.push(format!("{field}.mean: {mean} must be positive"));
                }
                if !(amplitude.is_finite() && amplitude.abs() <= 1.0) {
                    out.push(format!("{field}.amplitude: {amplitude} must lie in [-1, 1]"));
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientParams {
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "default_delta_reg")]
    pub delta_reg: f64,
    /// Replaces the preset's noise coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Sigma>,
    /// Replaces the preset's reaction term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction: Option<Reaction>,
}

impl Default for CoefficientParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            delta_reg: default_delta_reg(),
            sigma: None,
            reaction: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_delta_reg() -> f64 {
    PresetParams::default().delta_reg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Largest retained `|k|∞`.
    pub cutoff: u32,
    pub spectrum: AmplitudeRule,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            cutoff: 4,
            spectrum: AmplitudeRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub base: u64,
    /// Number of independent noise paths; member `i` uses `derive_seed(base, i)`.
    #[serde(default = "one_path")]
    pub paths: usize,
}

fn one_path() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack of pathwise contraction inequalities.
    pub contraction: f64,
    /// Absolute bound on semiflow and cocycle residuals.
    pub residual: f64,
    /// Relative bound on the mass-balance residual.
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            contraction: 5e-3,
            residual: 1e-12,
            mass: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    /// Start time of the cocycle check.
    pub shift: f64,
    /// Intermediate restart time of the semiflow check; defaults to `T/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart: Option<f64>,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            shift: 0.0,
            restart: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicityParams {
    /// Increasing horizons at which `P(d(t) > δ)` is estimated; defaults to `[T]`.
    #[serde(default)]
    pub horizons: Vec<f64>,
    pub delta: f64,
}

impl Default for ErgodicityParams {
    fn default() -> Self {
        Self {
            horizons: Vec::new(),
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionParams {
    pub range: [f64; 2],
    pub samples: usize,
}

impl Default for AssumptionParams {
    fn default() -> Self {
        Self {
            range: [1e-4, 10.0],
            samples: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub preset: PresetName,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub coefficients: CoefficientParams,
    pub grid: Grid,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub seeds: SeedConfig,
    pub initial: InitialData,
    /// Second initial datum for two-point commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_alt: Option<InitialData>,
    pub out: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Worker threads for ensembles; `0` uses every core.
    #[serde(default = "one_path")]
    pub workers: usize,
    #[serde(default = "one_path")]
    pub save_every: usize,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default)]
    pub ergodicity: ErgodicityParams,
    #[serde(default)]
    pub assumptions: AssumptionParams,
}

impl ExperimentConfig {
    /// Configuration for `selftest` when no file is given.
    pub fn selftest(out: PathBuf, seed: u64) -> Self {
        Self {
            command: Command::Selftest,
            preset: PresetName::Heat,
            epsilon: 0.0,
            coefficients: CoefficientParams::default(),
            grid: Grid {
                dim: 1,
                n: 64,
                length: 1.0,
            },
            dt: 1e-4,
            t: 0.01,
            noise: NoiseConfig::default(),
            seeds: SeedConfig { base: seed, paths: 1 },
            initial: InitialData::Constant { value: 1.0 },
            initial_alt: None,
            out,
            tolerances: Tolerances::default(),
            workers: 1,
            save_every: 1,
            flow: FlowParams::default(),
            ergodicity: ErgodicityParams::default(),
            assumptions: AssumptionParams::default(),
        }
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(file: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(file)?;
        if file.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            toml::from_str(&text).map_err(|e| Error::Format {
                path: file.display().to_string(),
                reason: e.to_string(),
            })
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format {
            path: "config".into(),
            reason: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format {
            path: "config".into(),
            reason: e.to_string(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn member_seeds(&self) -> Vec<u64> {
        (0..self.seeds.paths as u64)
            .map(|i| derive_seed(self.seeds.base, i))
            .collect()
    }

    pub fn basis(&self) -> Result<NoiseBasis> {
        build_basis(self.grid.dim, self.noise.cutoff, self.noise.spectrum)
    }

    pub fn coefficient_set(&self, basis: &NoiseBasis) -> Result<CoefficientSet> {
        let params = PresetParams {
            epsilon: self.epsilon,
            f1: basis.f1(),
            kappa: self.coefficients.kappa,
            delta_reg: self.coefficients.delta_reg,
            sigma: self.coefficients.sigma,
        };
        let mut cs = preset(self.preset, &params)?;
        if let Some(r) = self.coefficients.reaction {
            cs.reaction = r;
        }
        cs.validate()?;
        Ok(cs)
    }

    pub fn restart_time(&self) -> f64 {
        self.flow
            .restart
            .unwrap_or_else(|| (0.5 * self.t / self.dt).floor() * self.dt)
    }

    pub fn horizons(&self) -> Vec<f64> {
        if self.ergodicity.horizons.is_empty() {
            vec![self.t]
        } else {
            self.ergodicity.horizons.clone()
        }
    }

    /// Checks every field and reports all problems at once, including the
    /// stability bound of the explicit terms at the initial maximum.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if let Err(e) = self.grid.validate() {
            bad.push(format!("grid: {e}"));
        }
        let dt_ok = self.dt.is_finite() && self.dt > 0.0;
        if !dt_ok {
            bad.push(format!("dt: {} must be positive", self.dt));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            bad.push(format!("T: {} must be positive", self.t));
        }
        let aligned = |name: &str, x: f64, bad: &mut Vec<String>| {
            if dt_ok {
                if let Err(e) = aligned_steps(x, self.dt) {
                    bad.push(format!("{name}: {e}"));
                }
            }
        };
        aligned("T", self.t, &mut bad);
        if !(0.0..=1.0).contains(&self.epsilon) {
            bad.push(format!("epsilon: {} not in [0, 1]", self.epsilon));
        }
        if self.seeds.paths == 0 {
            bad.push("seeds.paths: must be at least 1".into());
        }
        if self.save_every == 0 {
            bad.push("save_every: must be at least 1".into());
        }
        let tol = self.tolerances;
        for (name, v) in [
            ("tolerances.contraction", tol.contraction),
            ("tolerances.residual", tol.residual),
            ("tolerances.mass", tol.mass),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                bad.push(format!("{name}: {v} must be finite and nonnegative"));
            }
        }
        self.initial.problems("initial", &mut bad);
        match (&self.initial_alt, self.command.needs_pair()) {
            (Some(alt), _) => alt.problems("initial_alt", &mut bad),
            (None, true) => bad.push(format!("initial_alt: required by `{}`", self.command)),
            (None, false) => {}
        }
        match self.command {
            Command::Flowcheck => {
                let s = self.flow.shift;
                if !(0.0 <= s && s < self.t) {
                    bad.push(format!("flow.shift: {s} must lie in [0, T)"));
                }
                aligned("flow.shift", s, &mut bad);
                let r = self.restart_time();
                if !(0.0 <= r && r <= self.t) {
                    bad.push(format!("flow.restart: {r} must lie in [0, T]"));
                }
                aligned("flow.restart", r, &mut bad);
            }
            Command::Ergodicity => {
                let h = self.horizons();
                if h.iter().any(|&x| !(x > 0.0 && x <= self.t)) {
                    bad.push(format!("ergodicity.horizons: {h:?} must lie in (0, T]"));
                }
                if h.windows(2).any(|w| w[1] <= w[0]) {
                    bad.push(format!("ergodicity.horizons: {h:?} must be increasing"));
                }
                for &x in &h {
                    aligned("ergodicity.horizons", x, &mut bad);
                }
                if !(self.ergodicity.delta > 0.0) {
                    bad.push(format!("ergodicity.delta: {} must be positive", self.ergodicity.delta));
                }
            }
            Command::CheckAssumptions => {
                let [lo, hi] = self.assumptions.range;
                if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                    bad.push(format!(
                        "assumptions.range: {:?} must satisfy 0 < lo < hi",
                        self.assumptions.range
                    ));
                }
                if self.assumptions.samples < 100 {
                    bad.push(format!("assumptions.samples: {} < 100", self.assumptions.samples));
                }
            }
            _ => {}
        }
        match self.basis() {
            Err(e) => bad.push(format!("noise: {e}")),
            Ok(basis) => match self.coefficient_set(&basis) {
                Err(e) => bad.push(format!("coefficients: {e}")),
                Ok(cs) if self.command.runs_solver() && dt_ok && self.grid.validate().is_ok() => {
                    match FvSolver::new(self.grid, &cs, &basis, self.dt) {
                        Err(e) => bad.push(format!("dt: {e}")),
                        Ok(solver) => {
                            let top = self.initial.max().max(self.initial_alt.map_or(0.0, |a| a.max()));
                            let limit = solver.stability_limit(top);
                            if self.dt > limit {
                                bad.push(format!(
                                    "dt: {} exceeds the stability limit {limit:.3e} at max rho0 = {top}",
                                    self.dt
                                ));
                            }
                        }
                    }
                }
                Ok(_) => {}
            },
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}
