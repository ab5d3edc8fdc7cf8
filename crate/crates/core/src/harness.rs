//! Replicate studies: simulate, fit, and score estimators against known α.
//!
//! Each replicate's dataset depends only on `(design.seed, replicate)`; chains
//! for that replicate use their own streams. Per-replicate outcomes are
//! optionally appended to a JSON-lines file so an interrupted study resumes.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{fit_trimmed, BorMethod};
use crate::error::{Error, Result};
use crate::model::{Dataset, Window};
use crate::rng::{chain_stream, data_stream};
use crate::sampler::{run_chain, summarize, ChainConfig, CoefSummary};
use crate::selection::{adaptive_fit, DeltaGrid};
use crate::synth::{gen_dataset_stream, GenDesign};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Estimator {
    BayesFull,
    BayesTrimmed { delta: f64 },
    BayesAdaptive { grid: DeltaGrid },
    Bolr { delta: f64 },
    Ols { delta: f64 },
}

impl Estimator {
    pub fn label(&self) -> String {
        match self {
            Estimator::BayesFull => "bayes-full".into(),
            Estimator::BayesTrimmed { delta } => format!("bayes-trimmed({delta})"),
            Estimator::BayesAdaptive { grid } => format!("bayes-adaptive({:?})", grid.deltas()),
            Estimator::Bolr { delta } => format!("bolr({delta})"),
            Estimator::Ols { delta } => format!("ols({delta})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub design: GenDesign,
    pub estimator: Estimator,
    pub replicates: usize,
    pub chain: ChainConfig,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        self.design.validate()?;
        self.chain.validate()?;
        match &self.estimator {
            Estimator::BayesAdaptive { grid } => grid.validate_for(self.design.t)?,
            Estimator::BayesTrimmed { delta }
            | Estimator::Bolr { delta }
            | Estimator::Ols { delta } => {
                DeltaGrid::new(vec![*delta])?.validate_for(self.design.t)?
            }
            Estimator::BayesFull => {}
        }
        Ok(())
    }

    /// Canonical JSON of everything that determines a replicate's outcome.
    /// The replicate count is excluded so a finished study can be extended.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&(&self.design, &self.estimator, &self.chain))
            .expect("config serializes")
    }
}

/// α-block estimates of one window inside an adaptive fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub waic_total: f64,
    pub alpha: Vec<CoefSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub data_stream: u64,
    /// α-block estimates and intervals; empty when the fit failed.
    pub alpha: Vec<CoefSummary>,
    pub selected_delta: Option<f64>,
    #[serde(default)]
    pub per_delta: Vec<DeltaEstimate>,
    pub error: Option<String>,
}

impl ReplicateRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ResumeLine {
    fingerprint: String,
    record: ReplicateRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub coef_index: usize,
    pub true_value: f64,
    pub bias: f64,
    pub rmse: f64,
    pub coverage: f64,
    pub sign_recovery: Option<f64>,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub estimator: String,
    pub records: Vec<ReplicateRecord>,
    pub rows: Vec<MetricRow>,
    /// Percentage of successful replicates selecting each Δ (adaptive only).
    pub trim_frequencies: Option<Vec<(f64, f64)>>,
    pub failures: usize,
}

/// Dataset of replicate `r`.
pub fn replicate_dataset(design: &GenDesign, r: usize) -> Result<Dataset> {
    gen_dataset_stream(design, data_stream(r as u64))
}

pub fn run_replicate(cfg: &StudyConfig, r: usize) -> ReplicateRecord {
    let mut record = ReplicateRecord {
        replicate: r,
        seed: cfg.design.seed,
        data_stream: data_stream(r as u64),
        alpha: Vec::new(),
        selected_delta: None,
        per_delta: Vec::new(),
        error: None,
    };
    let chain = cfg.chain.clone().with_stream(chain_stream(r as u64, 0));
    let outcome = replicate_dataset(&cfg.design, r).and_then(|data| {
        match &cfg.estimator {
            Estimator::BayesFull => {
                let draws = run_chain(&data, &Window::full(&data), &chain)?;
                record.alpha = summarize(&draws).alpha;
            }
            Estimator::BayesTrimmed { delta } => {
                let draws = run_chain(&data, &Window::new(&data, *delta)?, &chain)?;
                record.alpha = summarize(&draws).alpha;
            }
            Estimator::BayesAdaptive { grid } => {
                let fit = adaptive_fit(&data, grid, &chain)?;
                record.alpha = fit.selected_fit().summary.alpha.clone();
                record.selected_delta = Some(fit.selected_delta());
                record.per_delta = fit
                    .fits
                    .iter()
                    .map(|f| DeltaEstimate {
                        delta: f.delta,
                        waic_total: f.waic.total,
                        alpha: f.summary.alpha.clone(),
                    })
                    .collect();
            }
            Estimator::Bolr { delta } => {
                record.alpha = fit_trimmed(&data, *delta, BorMethod::Logistic)?.summaries();
            }
            Estimator::Ols { delta } => {
                record.alpha = fit_trimmed(&data, *delta, BorMethod::LeastSquares)?.summaries();
            }
        }
        Ok(())
    });
    if let Err(e) = outcome {
        record.alpha.clear();
        record.per_delta.clear();
        record.selected_delta = None;
        record.error = Some(e.to_string());
    }
    record
}

fn load_resume(path: &PathBuf, fingerprint: &str) -> Result<BTreeMap<usize, ReplicateRecord>> {
    let mut done = BTreeMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(e.into()),
    };
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // A torn final line from an interrupted write is ignored.
        let parsed: ResumeLine = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if parsed.fingerprint != fingerprint {
            return Err(Error::Config(format!(
                "resume file {} line {} was written by a different study configuration",
                path.display(),
                k + 1
            )));
        }
        done.insert(parsed.record.replicate, parsed.record);
    }
    Ok(done)
}

/// Runs (or resumes) a study. Replicates run in the rayon pool; the table is a
/// sequential reduction in replicate order.
pub fn run_study(cfg: &StudyConfig, resume: Option<PathBuf>) -> Result<StudyResult> {
    cfg.validate()?;
    let fingerprint = cfg.fingerprint();
    let mut done = match &resume {
        Some(p) => load_resume(p, &fingerprint)?,
        None => BTreeMap::new(),
    };
    let sink = match &resume {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Some(Mutex::new(
                OpenOptions::new().create(true).append(true).open(p)?,
            ))
        }
        None => None,
    };
    let todo: Vec<usize> = (0..cfg.replicates)
        .filter(|r| !done.contains_key(r))
        .collect();
    let fresh: Vec<ReplicateRecord> = todo
        .into_par_iter()
        .map(|r| {
            let record = run_replicate(cfg, r);
            if let Some(sink) = &sink {
                let line = serde_json::to_string(&ResumeLine {
                    fingerprint: fingerprint.clone(),
                    record: record.clone(),
                })?;
                let mut f = sink.lock().expect("resume file lock");
                writeln!(f, "{line}")?;
                f.flush()?;
            }
            Ok(record)
        })
        .collect::<Result<_>>()?;
    for r in fresh {
        done.insert(r.replicate, r);
    }
    let records: Vec<ReplicateRecord> = done
        .into_values()
        .filter(|r| r.replicate < cfg.replicates)
        .collect();
    Ok(assemble(&cfg.estimator, records, &cfg.design.alpha))
}

/// Builds the study result from finished records.
pub fn assemble(
    estimator: &Estimator,
    records: Vec<ReplicateRecord>,
    truth: &[f64],
) -> StudyResult {
    let rows = aggregate(&records, truth);
    let trim_frequencies = match estimator {
        Estimator::BayesAdaptive { grid } => Some(trim_frequencies(&records, grid)),
        _ => None,
    };
    StudyResult {
        estimator: estimator.label(),
        failures: records.iter().filter(|r| !r.ok()).count(),
        records,
        rows,
        trim_frequencies,
    }
}

/// Records restricted to one window of an adaptive study, as if that window had
/// been fitted alone.
pub fn records_for_delta(records: &[ReplicateRecord], delta: f64) -> Vec<ReplicateRecord> {
    records
        .iter()
        .map(|r| {
            let mut out = r.clone();
            out.selected_delta = None;
            out.per_delta = Vec::new();
            match r.per_delta.iter().find(|d| d.delta == delta) {
                Some(d) if r.ok() => out.alpha = d.alpha.clone(),
                _ => {
                    out.alpha = Vec::new();
                    out.error = Some(
                        r.error
                            .clone()
                            .unwrap_or_else(|| format!("no fit at delta {delta}")),
                    );
                }
            }
            out
        })
        .collect()
}

/// Bias, rmse, coverage and sign recovery per α coordinate over the successful
/// replicates.
pub fn aggregate(records: &[ReplicateRecord], truth: &[f64]) -> Vec<MetricRow> {
    let ok: Vec<&ReplicateRecord> = records
        .iter()
        .filter(|r| r.ok() && r.alpha.len() == truth.len())
        .collect();
    let n = ok.len() as f64;
    truth
        .iter()
        .enumerate()
        .map(|(k, &tv)| {
            if ok.is_empty() {
                return MetricRow {
                    coef_index: k,
                    true_value: tv,
                    bias: f64::NAN,
                    rmse: f64::NAN,
                    coverage: f64::NAN,
                    sign_recovery: None,
                    replicates: 0,
                };
            }
            let err: Vec<f64> = ok.iter().map(|r| r.alpha[k].estimate - tv).collect();
            let bias = err.iter().sum::<f64>() / n;
            let rmse = (err.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
            let coverage = 100.0 * ok.iter().filter(|r| r.alpha[k].covers(tv)).count() as f64 / n;
            let sign_recovery = (tv != 0.0).then(|| {
                100.0
                    * ok.iter()
                        .filter(|r| r.alpha[k].recovers_sign(tv) == Some(true))
                        .count() as f64
                    / n
            });
            MetricRow {
                coef_index: k,
                true_value: tv,
                bias,
                rmse,
                coverage,
                sign_recovery,
                replicates: ok.len(),
            }
        })
        .collect()
}

pub fn trim_frequencies(records: &[ReplicateRecord], grid: &DeltaGrid) -> Vec<(f64, f64)> {
    let chosen: Vec<f64> = records.iter().filter_map(|r| r.selected_delta).collect();
    grid.deltas()
        .iter()
        .map(|&d| {
            let c = chosen.iter().filter(|&&s| s == d).count();
            let pct = if chosen.is_empty() {
                f64::NAN
            } else {
                100.0 * c as f64 / chosen.len() as f64
            };
            (d, pct)
        })
        .collect()
}

pub fn write_table_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["coef", "true", "bias", "rmse", "cvrg", "sign", "replicates"])
        .map_err(|e| Error::Data(format!("csv: {e}")))?;
    for r in rows {
        w.write_record([
            (r.coef_index + 1).to_string(),
            r.true_value.to_string(),
            r.bias.to_string(),
            r.rmse.to_string(),
            r.coverage.to_string(),
            r.sign_recovery.map(|v| v.to_string()).unwrap_or_default(),
            r.replicates.to_string(),
        ])
        .map_err(|e| Error::Data(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table: coefficient, truth, bias, rmse, coverage, sign.
pub fn format_table(result: &StudyResult) -> String {
    let mut s = format!("estimator: {}\n", result.estimator);
    s.push_str(&format!(
        "{:>5} {:>7} {:>8} {:>7} {:>6} {:>6}\n",
        "coef", "true", "bias", "rmse", "cvrg", "sign"
    ));
    for r in &result.rows {
        let sign = r
            .sign_recovery
            .map(|v| format!("{v:6.0}"))
            .unwrap_or_else(|| format!("{:>6}", "-"));
        s.push_str(&format!(
            "{:>5} {:>7.2} {:>8.3} {:>7.3} {:>6.0} {}\n",
            r.coef_index + 1,
            r.true_value,
            r.bias,
            r.rmse,
            r.coverage,
            sign
        ));
    }
    if let Some(freq) = &result.trim_frequencies {
        let parts: Vec<String> = freq.iter().map(|(d, p)| format!("{d}:{p:.0}")).collect();
        s.push_str(&format!("trim: {}\n", parts.join(" / ")));
    }
    let n = result.records.len();
    s.push_str(&format!(
        "replicates: {} ok, {} failed\n",
        n - result.failures,
        result.failures
    ));
    s
}
