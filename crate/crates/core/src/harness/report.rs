//! Run reports: checks, tables of series, and the manifest that makes them
//! reproducible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// JSON cannot hold non-finite numbers; they are stored saturated.
fn storable(x: f64) -> f64 {
    if x.is_nan() {
        f64::MAX
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: storable(value),
            threshold: storable(threshold),
            detail: detail.into(),
        }
    }

    /// `value ≤ threshold`
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(
            name,
            value <= threshold,
            value,
            threshold,
            format!("{value:.6e} <= {threshold:.6e}"),
        )
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

/// Named columns of equal length.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column(mut self, name: impl Into<String>, values: &[f64]) -> Self {
        if let Some(first) = self.data.first() {
            assert_eq!(first.len(), values.len(), "column lengths differ");
        }
        self.columns.push(name.into());
        self.data.push(values.iter().map(|&x| storable(x)).collect());
        self
    }

    pub fn rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in 0..self.rows() {
            for (c, col) in self.data.iter().enumerate() {
                if c > 0 {
                    s.push(',');
                }
                write!(s, "{}", col[r]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    /// SHA-256 of the compact JSON form of `config`.
    pub config_sha256: String,
    /// Seed of every noise path, in member order.
    pub seeds: Vec<u64>,
    /// Stored noise paths, relative to the report's directory.
    pub noise_files: Vec<String>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, noise_files: Vec<String>) -> Result<Self> {
        Ok(Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            config_sha256: config_hash(config)?,
            seeds: config.member_seeds(),
            noise_files,
        })
    }
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(config)?.as_bytes()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub manifest: Manifest,
    pub checks: Vec<Check>,
    pub tables: BTreeMap<String, Table>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks.iter().map(Check::line).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(file: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(file)?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: file.display().to_string(),
            reason: e.to_string(),
        })
    }

    /// Writes `report.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(super::REPORT_FILE), self.to_json()?)?;
        for (name, table) in &self.tables {
            std::fs::write(dir.join(format!("{name}.csv")), table.to_csv())?;
        }
        Ok(())
    }
}
