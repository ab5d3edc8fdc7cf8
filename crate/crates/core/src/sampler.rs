//! Elliptical slice sampling with a heavy-tailed (multivariate t) ellipse.
//!
//! The posterior is factored as `p*(θ) ∝ L*(θ)·π(θ)` where `π` is a centred
//! multivariate t with scale matrix equal to the prior covariance, and
//! `L* = likelihood · Gaussian prior / π`. Each step first draws the latent t
//! scale given the current state, then runs an ordinary elliptical slice step
//! on the conditionally Gaussian ellipse.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{log_prior, Dataset, LinkConfig, Window, WindowedModel};
use crate::rng::stream_rng;

pub const DEFAULT_SHRINK_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub total_iters: usize,
    pub burn_in: usize,
    pub keep: usize,
    pub seed: u64,
    /// RNG stream; distinct chains sharing a seed must use distinct streams.
    #[serde(default)]
    pub stream: u64,
    pub ellipse_dof: f64,
    #[serde(default = "default_shrink_cap")]
    pub shrink_cap: usize,
}

fn default_shrink_cap() -> usize {
    DEFAULT_SHRINK_CAP
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            total_iters: 10_000,
            burn_in: 5_000,
            keep: 1_000,
            seed: 0,
            stream: 0,
            ellipse_dof: 6.0,
            shrink_cap: DEFAULT_SHRINK_CAP,
        }
    }
}

impl ChainConfig {
    /// Reduced settings for replicate studies on a workstation.
    pub fn desk(seed: u64) -> Self {
        Self {
            total_iters: 4_000,
            burn_in: 2_000,
            keep: 500,
            seed,
            ..Self::default()
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iters {
            return Err(Error::Config(format!(
                "burn-in {} must be smaller than total iterations {}",
                self.burn_in, self.total_iters
            )));
        }
        if self.keep == 0 || self.keep > self.total_iters - self.burn_in {
            return Err(Error::Config(format!(
                "keep must be in 1..={}, got {}",
                self.total_iters - self.burn_in,
                self.keep
            )));
        }
        if !(self.ellipse_dof > 0.0 && self.ellipse_dof.is_finite()) {
            return Err(Error::Config(format!(
                "ellipse degrees of freedom must be positive, got {}",
                self.ellipse_dof
            )));
        }
        if self.shrink_cap == 0 {
            return Err(Error::Config("shrink cap must be positive".into()));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        (self.total_iters - self.burn_in) / self.keep
    }
}

/// Centred multivariate t with diagonal scale matrix `Σ = diag(scale²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalT {
    scale: Vec<f64>,
    dof: f64,
    ln_norm: f64,
}

impl EllipticalT {
    pub fn new(scale: Vec<f64>, dof: f64) -> Result<Self> {
        if scale.is_empty() || scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Config("ellipse scales must be positive".into()));
        }
        if !(dof > 0.0 && dof.is_finite()) {
            return Err(Error::Config(format!("invalid degrees of freedom {dof}")));
        }
        let q = scale.len() as f64;
        let ln_det_half: f64 = scale.iter().map(|s| s.ln()).sum();
        let ln_norm = ln_gamma(0.5 * (dof + q))
            - ln_gamma(0.5 * dof)
            - 0.5 * q * (dof * std::f64::consts::PI).ln()
            - ln_det_half;
        Ok(Self {
            scale,
            dof,
            ln_norm,
        })
    }

    /// Scale matrix equal to the prior covariance: `1/p` for both γ blocks, 1 for α.
    pub fn prior_shaped(p: usize, dof: f64) -> Result<Self> {
        let g = (1.0 / p as f64).sqrt();
        let mut scale = vec![g; 2 * p];
        scale.extend(std::iter::repeat(1.0).take(p));
        Self::new(scale, dof)
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// `θ'Σ⁻¹θ`.
    pub fn mahalanobis(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(&self.scale)
            .map(|(t, s)| (t / s) * (t / s))
            .sum()
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        let q = self.dim() as f64;
        self.ln_norm - 0.5 * (self.dof + q) * (self.mahalanobis(theta) / self.dof).ln_1p()
    }

    /// Unconditional draw: Gaussian scaled by `√(dof / χ²_dof)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let chi = ChiSquared::new(self.dof).expect("validated dof");
        let w: f64 = chi.sample(rng);
        self.gaussian_scaled(rng, (self.dof / w).sqrt())
    }

    /// Auxiliary ellipse vector given the current state: the latent scale is
    /// drawn from its conditional `(dof + θ'Σ⁻¹θ) / χ²_{dof+q}`.
    pub fn sample_auxiliary<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Vec<f64> {
        let q = self.dim() as f64;
        let chi = ChiSquared::new(self.dof + q).expect("validated dof");
        let w: f64 = chi.sample(rng);
        let s = (self.dof + self.mahalanobis(theta)) / w;
        self.gaussian_scaled(rng, s.sqrt())
    }

    fn gaussian_scaled<R: Rng + ?Sized>(&self, rng: &mut R, factor: f64) -> Vec<f64> {
        self.scale
            .iter()
            .map(|s| {
                let z: f64 = StandardNormal.sample(rng);
                factor * s * z
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EssOutcome {
    pub theta: Vec<f64>,
    pub log_lstar: f64,
    pub log_threshold: f64,
    /// Rejected angles before acceptance.
    pub shrinks: usize,
}

/// One elliptical slice transition from `theta` (whose `log L*` is `current`)
/// along the ellipse through the auxiliary vector `nu`.
///
/// Non-finite `log L*` values at proposals count as rejections; errors from the
/// target are propagated.
pub fn ess_step<R, F>(
    theta: &[f64],
    current: f64,
    nu: &[f64],
    log_lstar: &mut F,
    rng: &mut R,
    shrink_cap: usize,
) -> Result<EssOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    if theta.len() != nu.len() {
        return Err(Error::Dimension {
            what: "auxiliary vector",
            expected: theta.len(),
            got: nu.len(),
        });
    }
    if !current.is_finite() {
        return Err(Error::NonFinite(format!(
            "log L* at the current state is {current}"
        )));
    }
    let u: f64 = rng.random();
    let log_threshold = current + u.ln();
    let (mut lo, mut hi) = (-std::f64::consts::PI, std::f64::consts::PI);
    let mut proposal = vec![0.0; theta.len()];
    let mut shrinks = 0;
    loop {
        let a = lo + (hi - lo) * rng.random::<f64>();
        let (sin, cos) = a.sin_cos();
        for ((out, t), v) in proposal.iter_mut().zip(theta).zip(nu) {
            *out = t * cos + v * sin;
        }
        let value = log_lstar(&proposal)?;
        if value.is_finite() && value > log_threshold {
            return Ok(EssOutcome {
                theta: proposal,
                log_lstar: value,
                log_threshold,
                shrinks,
            });
        }
        shrinks += 1;
        if shrinks >= shrink_cap {
            return Err(Error::ShrinkCap {
                cap: shrink_cap,
                iteration: 0,
            });
        }
        if a > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
    }
}

/// Retained draws, stored row-major as `(γ₁, γ₂, α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    p: usize,
    keep: usize,
    values: Vec<f64>,
    /// Rejected angles per iteration, over the whole chain including burn-in.
    shrinks: Vec<u32>,
    config: ChainConfig,
}

impl PosteriorDraws {
    pub fn from_rows(p: usize, rows: &[Vec<f64>], config: ChainConfig) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * 3 * p);
        for r in rows {
            if r.len() != 3 * p {
                return Err(Error::Dimension {
                    what: "draw row",
                    expected: 3 * p,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Self {
            p,
            keep: rows.len(),
            values,
            shrinks: Vec::new(),
            config,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        3 * self.p
    }

    pub fn len(&self) -> usize {
        self.keep
    }

    pub fn is_empty(&self) -> bool {
        self.keep == 0
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim()..(k + 1) * self.dim()]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim())
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn shrinks(&self) -> &[u32] {
        &self.shrinks
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    /// Column names in storage order.
    pub fn header(p: usize) -> Vec<String> {
        let mut h = Vec::with_capacity(3 * p);
        for block in ["gamma1", "gamma2", "alpha"] {
            h.extend((0..p).map(|k| format!("{block}_{k}")));
        }
        h
    }

    /// CSV with one row per draw; values use the shortest exact decimal form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header(self.p)).map_err(csv_err)?;
        for r in self.rows() {
            w.write_record(r.iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, config: ChainConfig) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let header: Vec<String> = rd
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        if header.len() % 3 != 0 || header != Self::header(header.len() / 3) {
            return Err(Error::Data(format!("unexpected draws header {header:?}")));
        }
        let p = header.len() / 3;
        let mut rows = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        Error::Data(format!("draw row {}: cannot parse '{s}'", line + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(p, &rows, config)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

/// Runs a chain from `init` against an arbitrary `log L*`, with the ellipse `π`.
pub fn run_chain_with<F>(
    init: &[f64],
    ellipse: &EllipticalT,
    cfg: &ChainConfig,
    mut log_lstar: F,
) -> Result<PosteriorDraws>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    let dim = ellipse.dim();
    if init.len() != dim || dim % 3 != 0 {
        return Err(Error::Dimension {
            what: "initial state",
            expected: dim,
            got: init.len(),
        });
    }
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let stride = cfg.stride();
    let mut theta = init.to_vec();
    let mut current = log_lstar(&theta)?;
    let mut values = Vec::with_capacity(cfg.keep * dim);
    let mut shrinks = Vec::with_capacity(cfg.total_iters);
    let mut kept = 0;
    for iter in 0..cfg.total_iters {
        let nu = ellipse.sample_auxiliary(&theta, &mut rng);
        let step = ess_step(
            &theta,
            current,
            &nu,
            &mut log_lstar,
            &mut rng,
            cfg.shrink_cap,
        )
        .map_err(|e| match e {
            Error::ShrinkCap { cap, .. } => Error::ShrinkCap {
                cap,
                iteration: iter,
            },
            other => other,
        })?;
        theta = step.theta;
        current = step.log_lstar;
        shrinks.push(step.shrinks as u32);
        let since = iter + 1;
        if kept < cfg.keep && since > cfg.burn_in && (since - cfg.burn_in) % stride == 0 {
            values.extend_from_slice(&theta);
            kept += 1;
        }
    }
    Ok(PosteriorDraws {
        p: dim / 3,
        keep: kept,
        values,
        shrinks,
        config: cfg.clone(),
    })
}

/// `log L*(θ) = log-likelihood + log Gaussian prior − log π(θ)`.
pub fn log_lstar(model: &WindowedModel, ellipse: &EllipticalT, theta: &[f64]) -> Result<f64> {
    Ok(model.log_likelihood(theta)? + log_prior(theta, model.p())? - ellipse.log_density(theta))
}

/// Fits the model on window `w`, starting from θ = 0.
pub fn run_chain(data: &Dataset, w: &Window, cfg: &ChainConfig) -> Result<PosteriorDraws> {
    w.check_fittable(data)?;
    let model = WindowedModel::new(data, w, LinkConfig::default());
    run_chain_model(&model, cfg)
}

pub fn run_chain_model(model: &WindowedModel, cfg: &ChainConfig) -> Result<PosteriorDraws> {
    cfg.validate()?;
    let ellipse = EllipticalT::prior_shaped(model.p(), cfg.ellipse_dof)?;
    let init = vec![0.0; 3 * model.p()];
    run_chain_with(&init, &ellipse, cfg, |th| log_lstar(model, &ellipse, th))
}

/// Type-7 (linear interpolation) quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefSummary {
    pub estimate: f64,
    pub lo95: f64,
    pub hi95: f64,
}

impl CoefSummary {
    /// Median and central 95% interval of `values`.
    pub fn from_values(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            estimate: quantile_sorted(&v, 0.5),
            lo95: quantile_sorted(&v, 0.025),
            hi95: quantile_sorted(&v, 0.975),
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lo95 <= value && value <= self.hi95
    }

    /// Whether the interval lies strictly on the side of zero given by `truth`;
    /// `None` when `truth` is zero.
    pub fn recovers_sign(&self, truth: f64) -> Option<bool> {
        if truth > 0.0 {
            Some(self.lo95 > 0.0)
        } else if truth < 0.0 {
            Some(self.hi95 < 0.0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSummary {
    pub gamma1: Vec<CoefSummary>,
    pub gamma2: Vec<CoefSummary>,
    pub alpha: Vec<CoefSummary>,
}

impl ThetaSummary {
    /// All coordinates in storage order.
    pub fn flat(&self) -> Vec<CoefSummary> {
        let mut v = self.gamma1.clone();
        v.extend_from_slice(&self.gamma2);
        v.extend_from_slice(&self.alpha);
        v
    }
}

pub fn summarize(draws: &PosteriorDraws) -> ThetaSummary {
    let p = draws.p();
    let all: Vec<CoefSummary> = (0..draws.dim())
        .map(|c| CoefSummary::from_values(&draws.column(c)))
        .collect();
    ThetaSummary {
        gamma1: all[..p].to_vec(),
        gamma2: all[p..2 * p].to_vec(),
        alpha: all[2 * p..].to_vec(),
    }
}
