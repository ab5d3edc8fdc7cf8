//! CSV ingestion: missing-value and boundary drops, covariate transforms,
//! intercept and standardization (delegated to `Dataset`).
//!
//! Dialect: comma separated, header row required, UTF-8, `.` decimal point,
//! an empty cell means missing.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ddreg_core::{Dataset, Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bspline::bspline_basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Transform {
    Identity,
    Log1p,
    Bspline { df: usize },
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "identity" => return Ok(Transform::Identity),
            "log1p" => return Ok(Transform::Log1p),
            _ => {}
        }
        if let Some(df) = s
            .strip_prefix("bspline:")
            .or_else(|| s.strip_prefix("bspline"))
        {
            let df = df.trim_start_matches(['(', ':']).trim_end_matches(')');
            let df: usize = df
                .parse()
                .map_err(|_| Error::Config(format!("bad bspline df in '{s}'")))?;
            return Ok(Transform::Bspline { df });
        }
        Err(Error::Config(format!(
            "unknown transform '{s}' (expected identity, log1p or bspline:DF)"
        )))
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Identity => write!(f, "identity"),
            Transform::Log1p => write!(f, "log1p"),
            Transform::Bspline { df } => write!(f, "bspline:{df}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub response_column: String,
    pub covariate_columns: Vec<String>,
    pub threshold: f64,
    /// One per covariate column, same order.
    pub transforms: Vec<Transform>,
}

impl IngestSpec {
    pub fn validate(&self) -> Result<()> {
        if self
            .covariate_columns
            .iter()
            .any(|c| c == &self.response_column)
        {
            return Err(Error::Config(format!(
                "response column '{}' is also listed as a covariate",
                self.response_column
            )));
        }
        let mut seen = self.covariate_columns.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.covariate_columns.len() {
            return Err(Error::Config("covariate columns are repeated".into()));
        }
        if self.transforms.len() != self.covariate_columns.len() {
            return Err(Error::Config(format!(
                "{} transforms given for {} covariates",
                self.transforms.len(),
                self.covariate_columns.len()
            )));
        }
        for t in &self.transforms {
            if let Transform::Bspline { df } = t {
                if *df < 2 {
                    return Err(Error::Config(format!(
                        "bspline df must be at least 2, got {df}"
                    )));
                }
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub rows_read: usize,
    pub missing: usize,
    /// Response outside the open unit interval.
    pub boundary: usize,
    pub kept: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub drops: DropCounts,
}

pub fn ingest(spec: &IngestSpec) -> Result<Ingested> {
    let file = std::fs::File::open(&spec.path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", spec.path.display())))?;
    ingest_reader(spec, file)
}

pub fn ingest_reader<R: Read>(spec: &IngestSpec, input: R) -> Result<Ingested> {
    spec.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header row: {e}")))?
        .clone();
    let locate = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Data(format!("unknown column '{name}'")))
    };
    let y_col = locate(&spec.response_column)?;
    let x_cols = spec
        .covariate_columns
        .iter()
        .map(|c| locate(c))
        .collect::<Result<Vec<_>>>()?;

    let mut drops = DropCounts::default();
    let mut y = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); x_cols.len()];
    for (k, record) in rdr.records().enumerate() {
        // header is line 1
        let line = k + 2;
        let record = record.map_err(|e| Error::Data(format!("line {line}: {e}")))?;
        drops.rows_read += 1;
        let cell = |c: usize, name: &str| -> Result<Option<f64>> {
            let raw = record.get(c).unwrap_or("").trim();
            if raw.is_empty() {
                return Ok(None);
            }
            let v: f64 = raw.parse().map_err(|_| {
                Error::Data(format!(
                    "line {line}, column '{name}': '{raw}' is not a number"
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "line {line}, column '{name}': non-finite value '{raw}'"
                )));
            }
            Ok(Some(v))
        };
        let yv = cell(y_col, &spec.response_column)?;
        let xs = x_cols
            .iter()
            .zip(&spec.covariate_columns)
            .map(|(&c, name)| cell(c, name))
            .collect::<Result<Vec<_>>>()?;
        let Some(yv) = yv else {
            drops.missing += 1;
            continue;
        };
        if xs.iter().any(Option::is_none) {
            drops.missing += 1;
            continue;
        }
        if !(yv > 0.0 && yv < 1.0) {
            drops.boundary += 1;
            continue;
        }
        y.push(yv);
        for (col, v) in cols.iter_mut().zip(xs) {
            col.push(v.unwrap());
        }
    }
    drops.kept = y.len();

    let mut names = Vec::new();
    let mut expanded: Vec<Vec<f64>> = Vec::new();
    for ((col, name), t) in cols
        .into_iter()
        .zip(&spec.covariate_columns)
        .zip(&spec.transforms)
    {
        match t {
            Transform::Identity => {
                names.push(name.clone());
                expanded.push(col);
            }
            Transform::Log1p => {
                if let Some(bad) = col.iter().find(|&&v| v <= -1.0) {
                    return Err(Error::Data(format!(
                        "log1p of column '{name}' undefined at {bad}"
                    )));
                }
                names.push(name.clone());
                expanded.push(col.iter().map(|v| v.ln_1p()).collect());
            }
            Transform::Bspline { df } => {
                let basis = bspline_basis(&col, *df)
                    .map_err(|e| Error::Data(format!("column '{name}': {e}")))?;
                for k in 0..basis.ncols() {
                    names.push(format!("{name}_bs{}", k + 1));
                    expanded.push(basis.column(k).iter().copied().collect());
                }
            }
        }
    }
    let p = expanded.len() + 1;
    if y.len() < 3 * p {
        return Err(Error::Data(format!(
            "{} usable rows after dropping {} missing and {} boundary rows; need at least {} for p = {p}",
            y.len(),
            drops.missing,
            drops.boundary,
            3 * p
        )));
    }
    let n = y.len();
    let raw = DMatrix::from_fn(n, expanded.len(), |i, k| expanded[k][i]);
    let dataset = Dataset::from_raw_named(y, raw, spec.threshold, names)?;
    Ok(Ingested { dataset, drops })
}

/// Writes the response and the raw (post-transform, pre-standardization)
/// covariates. Shortest round-trip float formatting, so re-ingesting with
/// identity transforms rebuilds the same dataset.
pub fn dump_csv<W: Write>(data: &Dataset, response: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![response.to_string()];
    header.extend(data.column_names()[1..].iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    let raw = data.raw_covariates();
    let mut row = Vec::with_capacity(header.len());
    for i in 0..data.n() {
        row.clear();
        row.push(data.y()[i].to_string());
        row.extend((0..raw.ncols()).map(|k| raw[(i, k)].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn dump_csv_file(data: &Dataset, response: &str, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    dump_csv(data, response, std::io::BufWriter::new(f))
}

/// Header names of a CSV file.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    Ok(rdr
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header of {}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}
