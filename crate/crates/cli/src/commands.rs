//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns the report it wrote.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ddreg_core::baseline::{fit_trimmed, BaselineReport, BorMethod};
use ddreg_core::harness::{replicate_dataset, run_study, write_table_csv};
use ddreg_core::model::{jump_surface, ParamVector};
use ddreg_core::rng::data_stream;
use ddreg_core::sampler::{run_chain, summarize, PosteriorDraws, ThetaSummary};
use ddreg_core::selection::{adaptive_fit, coefficient_entries, DeltaGrid, SelectionReport};
use ddreg_core::synth::jump_prevalence;
use ddreg_core::{ChainConfig, Dataset, Error, Result, Window};
use serde::Serialize;

use crate::design::{load_design, load_study};
use crate::ingest::{dump_csv_file, ingest, read_header, DropCounts, IngestSpec, Transform};
use crate::plots::{jump_contour, jump_profiles, write_contour, write_profiles};
use crate::report::{
    baseline_table, fit_table, selection_table, sha256_hex, study_table, write_text, DataSummary,
    FitSection, JumpSummary, Provenance, RawCoefficient, Report, SimulationSection, StudySection,
};

pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.txt";
pub const DRAWS_FILE: &str = "draws.csv";
pub const PROFILES_FILE: &str = "jump_profiles.csv";
pub const CONTOUR_FILE: &str = "jump_contour.csv";
pub const DATA_FILE: &str = "data.csv";
pub const STUDY_TABLE_FILE: &str = "study_table.csv";
pub const RESUME_FILE: &str = "replicates.jsonl";

/// Data-source options shared by `fit`, `select` and `baseline`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataArgs {
    pub path: PathBuf,
    pub response: String,
    /// Empty means every column except the response.
    pub covariates: Vec<String>,
    /// `(column, transform)` overrides; unlisted columns use identity.
    pub transforms: Vec<(String, Transform)>,
    pub threshold: f64,
}

impl DataArgs {
    pub fn spec(&self) -> Result<IngestSpec> {
        let covariates = if self.covariates.is_empty() {
            read_header(&self.path)?
                .into_iter()
                .filter(|h| h != &self.response)
                .collect()
        } else {
            self.covariates.clone()
        };
        for (col, _) in &self.transforms {
            if !covariates.contains(col) {
                return Err(Error::Config(format!(
                    "transform given for '{col}', which is not a covariate"
                )));
            }
        }
        let transforms = covariates
            .iter()
            .map(|c| {
                self.transforms
                    .iter()
                    .rev()
                    .find(|(k, _)| k == c)
                    .map(|(_, t)| *t)
                    .unwrap_or(Transform::Identity)
            })
            .collect();
        Ok(IngestSpec {
            path: self.path.clone(),
            response_column: self.response.clone(),
            covariate_columns: covariates,
            threshold: self.threshold,
            transforms,
        })
    }
}

/// Settings hashed into the provenance block.
#[derive(Serialize)]
struct HashedSettings<'a, T: Serialize> {
    command: &'a str,
    data_sha256: Option<String>,
    ingest: Option<IngestEcho<'a>>,
    settings: T,
}

#[derive(Serialize)]
struct IngestEcho<'a> {
    response: &'a str,
    covariates: &'a [String],
    transforms: &'a [Transform],
    threshold: f64,
}

fn provenance<T: Serialize>(
    command: &str,
    spec: Option<&IngestSpec>,
    settings: T,
    seed: u64,
) -> Result<Provenance> {
    let data_sha256 = match spec {
        Some(s) => Some(sha256_hex(&std::fs::read(&s.path)?)),
        None => None,
    };
    let hashed = HashedSettings {
        command,
        data_sha256,
        ingest: spec.map(|s| IngestEcho {
            response: &s.response_column,
            covariates: &s.covariate_columns,
            transforms: &s.transforms,
            threshold: s.threshold,
        }),
        settings,
    };
    Ok(Provenance::for_config(&hashed, seed))
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Error::Config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

fn write_report(dir: &Path, report: &Report) -> Result<()> {
    write_text(&dir.join(REPORT_FILE), &report.to_json())
}

fn write_draws(dir: &Path, draws: &PosteriorDraws) -> Result<()> {
    let f = File::create(dir.join(DRAWS_FILE))?;
    draws.write_csv(BufWriter::new(f))
}

/// Profiles for every covariate; contour over the first two when `p ≥ 3`.
fn write_plots(
    dir: &Path,
    alpha_hat: &[f64],
    draws: Option<&PosteriorDraws>,
    names: &[String],
) -> Result<()> {
    let profiles = jump_profiles(alpha_hat, draws, names)?;
    write_profiles(
        &profiles,
        BufWriter::new(File::create(dir.join(PROFILES_FILE))?),
    )?;
    if alpha_hat.len() >= 3 {
        let contour = jump_contour(alpha_hat, 1, 2)?;
        write_contour(
            &contour,
            (&names[1], &names[2]),
            BufWriter::new(File::create(dir.join(CONTOUR_FILE))?),
        )?;
    }
    Ok(())
}

fn jump_summary(data: &Dataset, alpha_hat: &[f64]) -> Result<JumpSummary> {
    let p = data.p();
    let theta = ParamVector::new(&vec![0.0; p], &vec![0.0; p], alpha_hat)?;
    let j = jump_surface(&theta, data.x())?;
    let (prevalence, median) = jump_prevalence(alpha_hat, data.x());
    Ok(JumpSummary {
        prevalence,
        median,
        mean: j.iter().sum::<f64>() / j.len() as f64,
    })
}

fn fit_section(
    data: &Dataset,
    w: &Window,
    summary: &ThetaSummary,
    draws: &PosteriorDraws,
) -> Result<FitSection> {
    let alpha_hat: Vec<f64> = summary.alpha.iter().map(|c| c.estimate).collect();
    let raw = data.destandardize(&alpha_hat)?;
    let shrinks = draws.shrinks();
    Ok(FitSection {
        delta: w.delta(),
        t1: w.t1(),
        t2: w.t2(),
        n_window: w.len(),
        coefficients: coefficient_entries(summary, data.column_names()),
        alpha_raw_scale: data
            .column_names()
            .iter()
            .zip(raw)
            .map(|(name, value)| RawCoefficient {
                name: name.clone(),
                value,
            })
            .collect(),
        jump: jump_summary(data, &alpha_hat)?,
        mean_shrinks: shrinks.iter().map(|&s| f64::from(s)).sum::<f64>()
            / shrinks.len().max(1) as f64,
    })
}

fn load(args: &DataArgs) -> Result<(IngestSpec, Dataset, DropCounts)> {
    let spec = args.spec()?;
    let ing = ingest(&spec)?;
    Ok((spec, ing.dataset, ing.drops))
}

pub fn fit_command(
    args: &DataArgs,
    delta: Option<f64>,
    chain: &ChainConfig,
    out: &Path,
) -> Result<Report> {
    chain.validate()?;
    let (spec, data, drops) = load(args)?;
    let w = match delta {
        Some(d) => Window::new(&data, d)?,
        None => Window::full(&data),
    };
    prepare_out_dir(out)?;
    let draws = run_chain(&data, &w, chain)?;
    let summary = summarize(&draws);
    let mut report = Report::new(
        "fit",
        provenance("fit", Some(&spec), (delta, chain), chain.seed)?,
    );
    let ds = DataSummary::new(&data, Some(drops));
    let fit = fit_section(&data, &w, &summary, &draws)?;
    write_text(&out.join(TABLE_FILE), &fit_table(&fit, &ds))?;
    write_draws(out, &draws)?;
    let alpha_hat: Vec<f64> = summary.alpha.iter().map(|c| c.estimate).collect();
    write_plots(out, &alpha_hat, Some(&draws), data.column_names())?;
    report.data = Some(ds);
    report.chain = Some(chain.clone());
    report.fit = Some(fit);
    write_report(out, &report)?;
    Ok(report)
}

pub fn select_command(
    args: &DataArgs,
    grid: &DeltaGrid,
    chain: &ChainConfig,
    out: &Path,
) -> Result<Report> {
    chain.validate()?;
    grid.validate_for(args.threshold)?;
    let (spec, data, drops) = load(args)?;
    prepare_out_dir(out)?;
    let fit = adaptive_fit(&data, grid, chain)?;
    let selection = SelectionReport::new(&fit, data.column_names());
    let best = fit.selected_fit();
    let mut report = Report::new(
        "select",
        provenance("select", Some(&spec), (grid, chain), chain.seed)?,
    );
    let ds = DataSummary::new(&data, Some(drops));
    let fs = fit_section(&data, &best.window, &best.summary, &best.draws)?;
    let mut table = selection_table(&selection);
    table.push('\n');
    table.push_str(&fit_table(&fs, &ds));
    write_text(&out.join(TABLE_FILE), &table)?;
    write_draws(out, &best.draws)?;
    let alpha_hat: Vec<f64> = best.summary.alpha.iter().map(|c| c.estimate).collect();
    write_plots(out, &alpha_hat, Some(&best.draws), data.column_names())?;
    report.data = Some(ds);
    report.chain = Some(chain.clone());
    report.fit = Some(fs);
    report.selection = Some(selection);
    write_report(out, &report)?;
    Ok(report)
}

pub fn baseline_command(
    args: &DataArgs,
    delta: f64,
    method: BorMethod,
    out: &Path,
) -> Result<Report> {
    let (spec, data, drops) = load(args)?;
    prepare_out_dir(out)?;
    let fit = fit_trimmed(&data, delta, method)?;
    let b = BaselineReport::new(&fit, delta, data.column_names());
    let mut report = Report::new(
        "baseline",
        provenance("baseline", Some(&spec), (delta, method), 0)?,
    );
    write_text(&out.join(TABLE_FILE), &baseline_table(&b))?;
    report.data = Some(DataSummary::new(&data, Some(drops)));
    report.baseline = Some(b);
    write_report(out, &report)?;
    Ok(report)
}

/// Generates replicate `replicate` of a design (the same dataset a study
/// would use) and writes it as `data.csv` with response column `y`.
pub fn simulate_command(
    design_arg: &str,
    n: Option<usize>,
    seed: Option<u64>,
    replicate: usize,
    out: &Path,
) -> Result<Report> {
    let mut design = load_design(design_arg)?;
    if let Some(n) = n {
        design.n = n;
    }
    if let Some(s) = seed {
        design.seed = s;
    }
    design.validate()?;
    prepare_out_dir(out)?;
    let data = replicate_dataset(&design, replicate)?;
    dump_csv_file(&data, "y", &out.join(DATA_FILE))?;
    let (prevalence, median) = jump_prevalence(&design.alpha, data.x());
    let scenario = format!("{:?}/{:?}", design.base_kind, design.kernel_kind).to_ascii_lowercase();
    let mut report = Report::new(
        "simulate",
        provenance("simulate", None, (&design, replicate), design.seed)?,
    );
    let sim = SimulationSection {
        scenario,
        replicate,
        data_stream: data_stream(replicate as u64),
        true_gamma1: design.gamma1.clone(),
        true_gamma2: design.gamma2.clone(),
        true_alpha: design.alpha.clone(),
        jump_prevalence: prevalence,
        jump_median: median,
    };
    let mut table = format!(
        "{} rows, p = {}, t = {}\nscenario {}  replicate {}\njump prevalence {:.3}  median j {:.4}\n",
        data.n(),
        data.p(),
        design.t,
        sim.scenario,
        replicate,
        prevalence,
        median
    );
    table.push_str(&format!("true alpha {:?}\n", design.alpha));
    write_text(&out.join(TABLE_FILE), &table)?;
    write_plots(out, &design.alpha, None, data.column_names())?;
    report.data = Some(DataSummary::new(&data, None));
    report.simulation = Some(sim);
    write_report(out, &report)?;
    Ok(report)
}

pub fn study_command(
    config: &Path,
    replicates: Option<usize>,
    resume: bool,
    out: &Path,
) -> Result<Report> {
    let mut cfg = load_study(config)?;
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    cfg.validate()?;
    prepare_out_dir(out)?;
    let resume_path = resume.then(|| out.join(RESUME_FILE));
    let result = run_study(&cfg, resume_path)?;
    let mut report = Report::new(
        "study",
        provenance(
            "study",
            None,
            (&cfg.design, &cfg.estimator, &cfg.chain, cfg.replicates),
            cfg.design.seed,
        )?,
    );
    write_text(&out.join(TABLE_FILE), &study_table(&result))?;
    write_table_csv(
        &result.rows,
        BufWriter::new(File::create(out.join(STUDY_TABLE_FILE))?),
    )?;
    report.chain = Some(cfg.chain.clone());
    report.study = Some(StudySection::new(&result));
    write_report(out, &report)?;
    Ok(report)
}
