//! Argument parsing and dispatch for the `ddreg` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddreg_core::baseline::BorMethod;
use ddreg_core::selection::DeltaGrid;
use ddreg_core::{ChainConfig, Error, ErrorKind, Result};

use crate::commands::{
    baseline_command, fit_command, select_command, simulate_command, study_command, DataArgs,
};
use crate::ingest::Transform;
use crate::report::Report;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ddreg", version = env!("DDREG_BUILD_ID"), about = "Density-discontinuity regression")]
pub struct Cli {
    /// Directory for report.json, table.txt and CSV outputs.
    #[arg(
        long,
        global = true,
        env = "DDREG_OUT_DIR",
        default_value = "ddreg-out"
    )]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one synthetic replicate as data.csv.
    Simulate {
        /// Preset (e.g. mixture-easy) or TOML design file.
        #[arg(long)]
        design: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        replicate: usize,
    },
    /// Fit one window (the full unit interval unless --delta is given).
    Fit {
        #[command(flatten)]
        data: DataOpts,
        #[arg(long)]
        delta: Option<f64>,
        #[command(flatten)]
        chain: ChainOpts,
    },
    /// Fit every window of the grid and pick the one with the lowest WAIC.
    Select {
        #[command(flatten)]
        data: DataOpts,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.4,0.25,0.1")]
        delta_grid: Vec<f64>,
        #[command(flatten)]
        chain: ChainOpts,
    },
    /// Trimmed binary-outcome regression of I(y >= t) on x.
    Baseline {
        #[command(flatten)]
        data: DataOpts,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Logistic)]
        method: MethodArg,
    },
    /// Replicate study from a TOML config; resumes from replicates.jsonl.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        /// Ignore and do not write the resume file.
        #[arg(long)]
        no_resume: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Logistic,
    Ols,
}

#[derive(Debug, Args)]
pub struct DataOpts {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Comma-separated covariate columns (default: all but the response).
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// COLUMN=identity|log1p|bspline:DF, repeatable.
    #[arg(long = "transform")]
    pub transforms: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

impl DataOpts {
    pub fn to_args(&self) -> Result<DataArgs> {
        let transforms = self
            .transforms
            .iter()
            .map(|s| {
                let (col, t) = s.split_once('=').ok_or_else(|| {
                    Error::Config(format!("--transform expects COLUMN=TRANSFORM, got '{s}'"))
                })?;
                Ok((col.trim().to_string(), t.parse::<Transform>()?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DataArgs {
            path: self.data.clone(),
            response: self.response.clone(),
            covariates: self.covariates.clone(),
            transforms,
            threshold: self.threshold,
        })
    }
}

#[derive(Debug, Args)]
pub struct ChainOpts {
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1_000)]
    pub keep: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ChainOpts {
    pub fn to_config(&self) -> ChainConfig {
        ChainConfig {
            total_iters: self.iters,
            burn_in: self.burn_in,
            keep: self.keep,
            seed: self.seed,
            ..ChainConfig::default()
        }
    }
}

pub fn run(cli: &Cli) -> Result<Report> {
    let out = &cli.out_dir;
    match &cli.command {
        Command::Simulate {
            design,
            n,
            seed,
            replicate,
        } => simulate_command(design, *n, *seed, *replicate, out),
        Command::Fit { data, delta, chain } => {
            fit_command(&data.to_args()?, *delta, &chain.to_config(), out)
        }
        Command::Select {
            data,
            delta_grid,
            chain,
        } => {
            let grid = DeltaGrid::new(delta_grid.clone())?;
            select_command(&data.to_args()?, &grid, &chain.to_config(), out)
        }
        Command::Baseline {
            data,
            delta,
            method,
        } => {
            let m = match method {
                MethodArg::Logistic => BorMethod::Logistic,
                MethodArg::Ols => BorMethod::LeastSquares,
            };
            baseline_command(&data.to_args()?, *delta, m, out)
        }
        Command::Study {
            config,
            replicates,
            no_resume,
        } => study_command(config, *replicates, !no_resume, out),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Numerical => EXIT_NUMERICAL,
    }
}
