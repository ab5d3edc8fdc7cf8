//! Versioned JSON report and fixed-width text tables.

use std::fmt::Write as _;

use ddreg_core::baseline::BaselineReport;
use ddreg_core::harness::{format_table, MetricRow, StudyResult};
use ddreg_core::selection::{CoefficientEntry, SelectionReport};
use ddreg_core::{ChainConfig, Dataset, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::DropCounts;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON Schema every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report-v1.schema.json");

pub const BUILD_ID: &str = env!("DDREG_BUILD_ID");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySection>,
}

impl Report {
    pub fn new(command: &str, provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            provenance,
            data: None,
            chain: None,
            fit: None,
            selection: None,
            baseline: None,
            simulation: None,
            study: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON of the command settings (data file
    /// digest included, paths excluded).
    pub config_hash: String,
    pub seed: u64,
    pub build_id: String,
}

impl Provenance {
    pub fn for_config<T: Serialize>(config: &T, seed: u64) -> Self {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        Self {
            config_hash: sha256_hex(&canonical),
            seed,
            build_id: BUILD_ID.to_string(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnInfo {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSummary {
    pub n: usize,
    pub p: usize,
    pub threshold: f64,
    /// Standardization constants; the intercept records mean 0 and sd 1.
    pub columns: Vec<ColumnInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drops: Option<DropCounts>,
}

impl DataSummary {
    pub fn new(data: &Dataset, drops: Option<DropCounts>) -> Self {
        let columns = data
            .column_names()
            .iter()
            .zip(data.column_means().iter().zip(data.column_sds()))
            .map(|(name, (&mean, &sd))| ColumnInfo {
                name: name.clone(),
                mean,
                sd,
            })
            .collect();
        Self {
            n: data.n(),
            p: data.p(),
            threshold: data.threshold(),
            columns,
            drops,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSummary {
    /// Share of rows with `x'α̂ > 0`.
    pub prevalence: f64,
    pub median: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCoefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub delta: f64,
    pub t1: f64,
    pub t2: f64,
    pub n_window: usize,
    pub coefficients: Vec<CoefficientEntry>,
    /// α̂ mapped back to the raw covariate scale.
    pub alpha_raw_scale: Vec<RawCoefficient>,
    pub jump: JumpSummary,
    pub mean_shrinks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub scenario: String,
    pub replicate: usize,
    pub data_stream: u64,
    pub true_gamma1: Vec<f64>,
    pub true_gamma2: Vec<f64>,
    pub true_alpha: Vec<f64>,
    pub jump_prevalence: f64,
    pub jump_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub estimator: String,
    pub replicates: usize,
    pub failures: usize,
    pub rows: Vec<MetricRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trim_frequencies: Option<Vec<(f64, f64)>>,
}

impl StudySection {
    pub fn new(result: &StudyResult) -> Self {
        Self {
            estimator: result.estimator.clone(),
            replicates: result.records.len(),
            failures: result.failures,
            rows: result.rows.clone(),
            trim_frequencies: result.trim_frequencies.clone(),
        }
    }
}

pub fn coefficient_table(entries: &[CoefficientEntry]) -> String {
    let width = entries
        .iter()
        .map(|e| e.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<7} {:<width$} {:>10} {:>10} {:>10}",
        "block", "name", "median", "lo95", "hi95"
    );
    for e in entries {
        let _ = writeln!(
            s,
            "{:<7} {:<width$} {:>10.4} {:>10.4} {:>10.4}",
            e.block, e.name, e.estimate, e.lo95, e.hi95
        );
    }
    s
}

pub fn fit_table(fit: &FitSection, data: &DataSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "window [{:.4}, {:.4}] (delta {})  n = {} of {}",
        fit.t1, fit.t2, fit.delta, fit.n_window, data.n
    );
    let _ = writeln!(
        s,
        "jump prevalence {:.3}  median j {:.4}  mean j {:.4}",
        fit.jump.prevalence, fit.jump.median, fit.jump.mean
    );
    s.push('\n');
    s.push_str(&coefficient_table(&fit.coefficients));
    s
}

pub fn selection_table(sel: &SelectionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "common subset size {}", sel.common_subset_size);
    let _ = writeln!(
        s,
        "{:>7} {:>8} {:>12} {:>12} {:>12}",
        "delta", "n", "waic_fit", "waic_cmplx", "waic"
    );
    for d in &sel.deltas {
        let mark = if d.delta == sel.selected_delta {
            " *"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "{:>7} {:>8} {:>12.4} {:>12.4} {:>12.4}{mark}",
            d.delta, d.n_window, d.waic_fit, d.waic_complexity, d.waic_total
        );
    }
    let _ = writeln!(s, "\nselected delta {}\n", sel.selected_delta);
    if let Some(d) = sel.deltas.iter().find(|d| d.delta == sel.selected_delta) {
        let alpha: Vec<CoefficientEntry> = d
            .coefficients
            .iter()
            .filter(|c| c.block == "alpha")
            .cloned()
            .collect();
        s.push_str(&coefficient_table(&alpha));
    }
    s
}

pub fn baseline_table(b: &BaselineReport) -> String {
    let width = b
        .coefficients
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:?} on |y - t| <= {}  n = {}",
        b.method, b.delta, b.n_trimmed
    );
    let _ = writeln!(
        s,
        "{:<width$} {:>10} {:>10} {:>10} {:>10}",
        "name", "estimate", "se", "lo95", "hi95"
    );
    for c in &b.coefficients {
        let _ = writeln!(
            s,
            "{:<width$} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            c.name, c.estimate, c.std_error, c.lo95, c.hi95
        );
    }
    s
}

pub fn study_table(result: &StudyResult) -> String {
    format_table(result)
}

pub fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn provenance_hash_depends_on_config() {
        let a = Provenance::for_config(&("fit", 1), 1);
        let b = Provenance::for_config(&("fit", 2), 1);
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a, Provenance::for_config(&("fit", 1), 1));
    }
}
