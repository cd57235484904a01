//! CSV tables and the run manifest.
//!
//! Every table has a single header row followed by numbers written with
//! `{:.16e}` (17 significant digits), so identical runs give byte-identical
//! files and values round-trip exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// A column-oriented numeric table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Summary values recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Flag(bool),
    Text(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x:.6e}"),
            Value::Flag(x) => write!(f, "{x}"),
            Value::Text(x) => write!(f, "{x}"),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Number(x)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Flag(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

/// What a pipeline produced: the files it wrote (relative to the output
/// directory) and scalar results such as maximum deviations.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub files: Vec<PathBuf>,
    pub results: BTreeMap<String, Value>,
}

impl Summary {
    pub fn record(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.results.insert(key.into(), value.into());
    }

    pub fn write_table(&mut self, out_dir: &Path, name: impl AsRef<Path>, table: &Table) -> Result<(), CliError> {
        table.write(&out_dir.join(name.as_ref()))?;
        self.files.push(name.as_ref().to_path_buf());
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    run: RunInfo<'a>,
    schemes: BTreeMap<&'static str, &'static str>,
    tolerances: BTreeMap<&'static str, f64>,
    results: &'a BTreeMap<String, Value>,
    config: &'a RunConfig,
}

#[derive(Debug, Serialize)]
struct RunInfo<'a> {
    command: &'a str,
    version: &'static str,
    units: &'static str,
    wall_time_seconds: f64,
    files: Vec<String>,
}

/// Numerical schemes used by the pipelines, recorded for reproducibility.
pub fn schemes(config: &RunConfig) -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("kernel_closed_form", "ohmic-exponential g_V(t) = sqrt(γ0Λ³/8π)/(1 + iΛt)²"),
        ("kernel_thermal", "graded Gauss-Legendre panels, order 16 checked against order 24"),
        ("retarded", "exponential trapezoid for the Volterra equation, free rotation exact"),
        ("correlation", "symmetrised double integral of the fluctuation-dissipation relation, trapezoid"),
        ("correlation_crosscheck", "two-time Volterra equation, trapezoid"),
        ("moments", "integrating-factor Heun with exact free rotation"),
        ("hpz_quadratures", "Heun"),
        ("oracle", "fixed-step RK4, phase ≤ 0.025 rad per step"),
        (
            "oracle_discretisation",
            if config.oracle.scheme == "linear-midpoint" { "linear-midpoint" } else { "gauss-legendre" },
        ),
    ])
}

pub fn tolerances() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("grid_resolution_dt_times_max_frequency", gqbm_core::greens::RESOLUTION_LIMIT),
        ("max_condition_number_u", gqbm_core::coeffs::MAX_CONDITION),
        ("moment_commutator_drift", 1e-6),
        ("thermal_kernel_relative_check", 1e-11),
    ])
}

pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: &RunConfig,
    summary: &Summary,
    wall_time_seconds: f64,
) -> Result<PathBuf, CliError> {
    let manifest = Manifest {
        run: RunInfo {
            command,
            version: env!("CARGO_PKG_VERSION"),
            units: "hbar = k_B = Lambda = 1; times in 1/Lambda, rates and frequencies in Lambda",
            wall_time_seconds,
            files: summary.files.iter().map(|p| p.display().to_string()).collect(),
        },
        schemes: schemes(config),
        tolerances: tolerances(),
        results: &summary.results,
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Config(format!("cannot serialise manifest: {e}")))?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("manifest.toml");
    fs::write(&path, text)?;
    Ok(path)
}
