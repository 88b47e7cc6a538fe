//! Configured experiments with persisted, replayable reports.

mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};

pub use config::{
    AssumptionParams, CoefficientParams, Command, ErgodicityParams, ExperimentConfig, FlowParams, InitialData,
    NoiseConfig, SeedConfig, Tolerances,
};
pub use report::{config_hash, sha256_hex, Check, Manifest, Report, Table};

use crate::error::{Error, Result};
use crate::noise::{read_path, sample_path, write_path};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub report_path: PathBuf,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn noise_file(member: usize) -> String {
    format!("noise/path_{member}.bin")
}

/// Validates `config`, runs it, and writes the report, CSV tables and noise
/// paths into `config.out`. Prints one PASS/FAIL line per check.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let ex = experiments::execute(config)?;
    let dir = &config.out;
    let mut files = Vec::with_capacity(ex.paths.len());
    if !ex.paths.is_empty() {
        std::fs::create_dir_all(dir.join("noise"))?;
    }
    for (i, p) in ex.paths.iter().enumerate() {
        let name = noise_file(i);
        write_path(p, &dir.join(&name))?;
        files.push(name);
    }
    let report = Report {
        manifest: Manifest::new(config, files)?,
        checks: ex.checks,
        tables: ex.tables,
    };
    report.write(dir)?;
    for line in report.lines() {
        println!("{line}");
    }
    Ok(RunOutcome {
        report,
        report_path: dir.join(REPORT_FILE),
    })
}

#[derive(Debug, Clone, Default)]
pub struct ReplayOutcome {
    /// Every mismatch found; empty when the replay is bit-exact.
    pub differences: Vec<String>,
}

impl ReplayOutcome {
    pub fn matches(&self) -> bool {
        self.differences.is_empty()
    }
}

/// Re-executes the experiment recorded in `report_path` and compares every
/// check, series and stored noise path bit for bit.
pub fn replay(report_path: &Path) -> Result<ReplayOutcome> {
    let stored = Report::read(report_path)?;
    let dir = report_path.parent().unwrap_or(Path::new("."));
    let cfg = &stored.manifest.config;
    let mut diff = Vec::new();
    if config_hash(cfg)? != stored.manifest.config_sha256 {
        diff.push("manifest: configuration does not match its recorded hash".to_string());
    }
    let seeds = cfg.member_seeds();
    if seeds != stored.manifest.seeds {
        diff.push(format!(
            "manifest: seeds {:?} do not derive from the configured base seed ({seeds:?})",
            stored.manifest.seeds
        ));
    }
    cfg.validate()?;
    for (i, name) in stored.manifest.noise_files.iter().enumerate() {
        let file = dir.join(name);
        let Some(&seed) = seeds.get(i) else {
            diff.push(format!("{name}: no member {i} in the configuration"));
            continue;
        };
        if !file.exists() {
            return Err(Error::MissingArtifact {
                path: file.display().to_string(),
                hint: format!(
                    "regenerate it by re-running `spde {} --config <config> --seed {}` (member {i} uses seed {seed})",
                    cfg.command, cfg.seeds.base
                ),
            });
        }
        let saved = read_path(&file)?;
        let basis = std::sync::Arc::new(cfg.basis()?);
        let fresh = sample_path(basis, cfg.dt, cfg.t, seed)?;
        if saved.increments() != fresh.increments() || saved.dt != fresh.dt {
            diff.push(format!("{name}: stored increments differ from seed {seed}"));
        }
    }
    let ex = experiments::execute(cfg)?;
    let fresh = Report {
        manifest: stored.manifest.clone(),
        checks: ex.checks,
        tables: ex.tables,
    };
    // compare what the JSON file would hold, so both sides saw the same rounding
    let fresh: Report = serde_json::from_str(&fresh.to_json()?)?;
    if fresh.checks != stored.checks {
        for (a, b) in fresh.checks.iter().zip(&stored.checks) {
            if a != b {
                diff.push(format!(
                    "check {}: replayed {:?} vs stored {:?}",
                    a.name, a.value, b.value
                ));
            }
        }
        if fresh.checks.len() != stored.checks.len() {
            diff.push(format!(
                "{} checks replayed, {} stored",
                fresh.checks.len(),
                stored.checks.len()
            ));
        }
    }
    for (name, t) in &stored.tables {
        match fresh.tables.get(name) {
            None => diff.push(format!("table {name}: not produced by the replay")),
            Some(f) if f != t => {
                let col = t
                    .columns
                    .iter()
                    .zip(&t.data)
                    .find(|(c, d)| f.columns.iter().position(|x| x == *c).map(|j| &f.data[j]) != Some(*d))
                    .map_or("layout".to_string(), |(c, _)| c.clone());
                diff.push(format!("table {name}: column {col} differs"));
            }
            Some(_) => {}
        }
    }
    for name in fresh.tables.keys().filter(|k| !stored.tables.contains_key(*k)) {
        diff.push(format!("table {name}: missing from the stored report"));
    }
    Ok(ReplayOutcome { differences: diff })
}

#[cfg(test)]
mod tests;
