//! Synthetic data with a manipulated density below the threshold.
//!
//! Responses are drawn from `f(y|x) ∝ b(y|x)·exp{−K(t − y)·(x'α)₊}` by rejection:
//! propose from the base density `b`, accept with probability `exp(−K·j)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{jump_link, Dataset, LinkConfig};
use crate::rng::{stream_rng, StreamRng};
use crate::special::ShapePair;

pub const REJECTION_CAP: usize = 1_000_000;

pub const GAMMA1: [f64; 6] = [-1.5, -0.4, -0.1, 0.0, 0.4, -0.1];
pub const GAMMA2: [f64; 6] = [-3.0, -0.1, 0.2, -0.6, 0.0, -0.1];
pub const ALPHA_EASY: [f64; 6] = [1.0, 0.3, 0.2, 0.2, 0.1, -0.1];
pub const ALPHA_HARD: [f64; 6] = [0.5, 0.2, -0.2, 0.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    MatchingBeta,
    MixtureBeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Indicator,
    DecayingGaussian,
}

/// The three studied (base, kernel) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Matching,
    Mixture,
    Decay,
}

impl Scenario {
    pub fn kinds(self) -> (BaseKind, KernelKind) {
        match self {
            Scenario::Matching => (BaseKind::MatchingBeta, KernelKind::Indicator),
            Scenario::Mixture => (BaseKind::MixtureBeta, KernelKind::Indicator),
            Scenario::Decay => (BaseKind::MatchingBeta, KernelKind::DecayingGaussian),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSetting {
    Easy,
    Hard,
}

impl AlphaSetting {
    pub fn values(self) -> [f64; 6] {
        match self {
            AlphaSetting::Easy => ALPHA_EASY,
            AlphaSetting::Hard => ALPHA_HARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDesign {
    pub base_kind: BaseKind,
    pub kernel_kind: KernelKind,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Weight of the contaminant component in the mixture base.
    #[serde(default = "default_mixture_weight")]
    pub mixture_weight: f64,
    #[serde(default = "default_contaminant")]
    pub contaminant_shapes: ShapePair,
    #[serde(default = "default_decay_rate")]
    pub decay_rate: f64,
    pub n: usize,
    pub p: usize,
    pub t: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub link: LinkConfig,
}

fn default_mixture_weight() -> f64 {
    0.5
}

fn default_contaminant() -> ShapePair {
    ShapePair { a: 15.0, b: 10.0 }
}

fn default_decay_rate() -> f64 {
    19.5
}

impl GenDesign {
    /// One of the six studied designs with `p = 6`, `t = 1/2`.
    pub fn named(scenario: Scenario, alpha: AlphaSetting, n: usize, seed: u64) -> Self {
        let (base_kind, kernel_kind) = scenario.kinds();
        Self {
            base_kind,
            kernel_kind,
            gamma1: GAMMA1.to_vec(),
            gamma2: GAMMA2.to_vec(),
            alpha: alpha.values().to_vec(),
            mixture_weight: default_mixture_weight(),
            contaminant_shapes: default_contaminant(),
            decay_rate: default_decay_rate(),
            n,
            p: 6,
            t: 0.5,
            seed,
            link: LinkConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p;
        if p == 0 || self.gamma1.len() != p || self.gamma2.len() != p || self.alpha.len() != p {
            return Err(Error::Config(format!(
                "coefficient vectors must all have length p = {p}"
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::Config(format!(
                "threshold {} outside (0, 1)",
                self.t
            )));
        }
        if !(0.0..=1.0).contains(&self.mixture_weight) {
            return Err(Error::Config(format!(
                "mixture weight {} outside [0, 1]",
                self.mixture_weight
            )));
        }
        if !(self.decay_rate >= 0.0 && self.decay_rate.is_finite()) {
            return Err(Error::Config(format!(
                "invalid decay rate {}",
                self.decay_rate
            )));
        }
        self.contaminant_shapes.validate()?;
        LinkConfig::new(self.link.lo, self.link.hi)?;
        Ok(())
    }

    /// Half kernel `K(u)` evaluated at `u = t − y`.
    pub fn kernel(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        match self.kernel_kind {
            KernelKind::Indicator => 1.0,
            KernelKind::DecayingGaussian => (-self.decay_rate * u * u).exp(),
        }
    }

    /// Base-density shapes `(s(x'γ₁), s(x'γ₂))` and jump `(x'α)₊` for a row.
    pub fn row_parameters(&self, x: &[f64]) -> (f64, f64, f64) {
        let dot = |v: &[f64]| x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        (
            self.link.apply(dot(&self.gamma1)),
            self.link.apply(dot(&self.gamma2)),
            jump_link(dot(&self.alpha)),
        )
    }
}

/// Intercept column followed by i.i.d. standard normals.
pub fn gen_covariates<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    let mut x = DMatrix::from_element(n, p, 1.0);
    for i in 0..n {
        for k in 1..p {
            x[(i, k)] = StandardNormal.sample(rng);
        }
    }
    x
}

/// Beta draw as a ratio of gamma draws; retries the measure-zero cases that
/// round to an endpoint.
fn beta_draw<R: Rng + ?Sized>(ga: &Gamma<f64>, gb: &Gamma<f64>, rng: &mut R) -> f64 {
    loop {
        let u = ga.sample(rng);
        let v = gb.sample(rng);
        let y = u / (u + v);
        if y > 0.0 && y < 1.0 {
            return y;
        }
    }
}

pub fn sample_response<R: Rng + ?Sized>(x: &[f64], design: &GenDesign, rng: &mut R) -> Result<f64> {
    sample_response_counted(x, design, rng).map(|(y, _)| y)
}

/// Like [`sample_response`], also returning the number of proposals used.
pub fn sample_response_counted<R: Rng + ?Sized>(
    x: &[f64],
    design: &GenDesign,
    rng: &mut R,
) -> Result<(f64, usize)> {
    let (a, b, j) = design.row_parameters(x);
    let gamma =
        |s: f64| Gamma::new(s, 1.0).map_err(|e| Error::Domain(format!("gamma shape {s}: {e}")));
    let (ga, gb) = (gamma(a)?, gamma(b)?);
    let c = design.contaminant_shapes;
    let (ca, cb) = (gamma(c.a)?, gamma(c.b)?);
    for proposals in 1..=REJECTION_CAP {
        let y = match design.base_kind {
            BaseKind::MixtureBeta if rng.random::<f64>() < design.mixture_weight => {
                beta_draw(&ca, &cb, rng)
            }
            _ => beta_draw(&ga, &gb, rng),
        };
        let k = design.kernel(design.t - y);
        if k == 0.0 || j == 0.0 || rng.random::<f64>() < (-k * j).exp() {
            return Ok((y, proposals));
        }
    }
    Err(Error::RejectionCap(REJECTION_CAP))
}

/// Covariates first, then responses row by row, all from `rng`.
pub fn gen_dataset_with(design: &GenDesign, rng: &mut StreamRng) -> Result<Dataset> {
    design.validate()?;
    let x = gen_covariates(design.n, design.p, rng);
    let mut y = Vec::with_capacity(design.n);
    let mut row = vec![0.0; design.p];
    for i in 0..design.n {
        for (k, v) in row.iter_mut().enumerate() {
            *v = x[(i, k)];
        }
        y.push(sample_response(&row, design, rng)?);
    }
    let raw = x.columns(1, design.p - 1).into_owned();
    Dataset::from_raw(y, raw, design.t)
}

/// Dataset on stream `stream` of the design's seed.
pub fn gen_dataset_stream(design: &GenDesign, stream: u64) -> Result<Dataset> {
    gen_dataset_with(design, &mut stream_rng(design.seed, stream))
}

pub fn gen_dataset(design: &GenDesign) -> Result<Dataset> {
    gen_dataset_stream(design, 0)
}

/// Fraction of rows with a strictly positive jump, and the median jump.
pub fn jump_prevalence(alpha: &[f64], x: &DMatrix<f64>) -> (f64, f64) {
    let mut j: Vec<f64> = x
        .row_iter()
        .map(|r| jump_link(r.iter().zip(alpha).map(|(a, b)| a * b).sum()))
        .collect();
    let positive = j.iter().filter(|&&v| v > 0.0).count() as f64 / j.len() as f64;
    j.sort_by(f64::total_cmp);
    (positive, crate::sampler::quantile_sorted(&j, 0.5))
}
