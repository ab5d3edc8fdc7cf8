//! Beta regression with a non-negative density jump at a known threshold.
//!
//! For a covariate row `x` the conditional density on the window `[t1, t2]` is
//!
//! ```text
//! f(y | x) = y^{a-1} (1-y)^{b-1} e^{-I(y<t)·j} / c(t; j, a, b, t1, t2)
//! a = s(x'γ₁),  b = s(x'γ₂),  j = (x'α)₊
//! ```
//!
//! with `s` the bounded logistic link of [`LinkConfig`]. Shapes enter the kernel
//! as `shape − 1` exponents, so the normalizing constant is evaluated at the
//! shapes themselves and each pointwise term is a proper log-density.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::log_norm_const_trunc_unchecked;

/// Tolerance used when checking that supplied columns are standardized.
const STANDARDIZED_TOL: f64 = 1e-8;

/// Bounded logistic link `s(z) = lo + (hi − lo)·σ(z)` for the beta shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub lo: f64,
    pub hi: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { lo: 0.1, hi: 30.0 }
    }
}

impl LinkConfig {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Config(format!(
                "link bounds need 0 < lo < hi < inf, got ({lo}, {hi})"
            )));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        self.lo + (self.hi - self.lo) * logistic(z)
    }
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn link_s(z: f64, cfg: &LinkConfig) -> f64 {
    cfg.apply(z)
}

/// Positive-part jump link.
#[inline]
pub fn jump_link(z: f64) -> f64 {
    z.max(0.0)
}

/// Responses in `(0, 1)`, a standardized design with a leading intercept column,
/// and the threshold. The raw (pre-standardization) covariates are kept so the
/// dataset can be written back out and re-read without drift.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: DMatrix<f64>,
    raw: DMatrix<f64>,
    t: f64,
    column_means: Vec<f64>,
    column_sds: Vec<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from raw covariates (`n × (p − 1)`, no intercept). Each
    /// column is centred and scaled to unit sample variance; the intercept
    /// column records mean 0 and sd 1.
    pub fn from_raw(y: Vec<f64>, raw: DMatrix<f64>, t: f64) -> Result<Self> {
        let names = (1..=raw.ncols()).map(|k| format!("x{k}")).collect();
        Self::from_raw_named(y, raw, t, names)
    }

    pub fn from_raw_named(
        y: Vec<f64>,
        raw: DMatrix<f64>,
        t: f64,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        if raw.nrows() != n {
            return Err(Error::Dimension {
                what: "covariate rows",
                expected: n,
                got: raw.nrows(),
            });
        }
        if covariate_names.len() != raw.ncols() {
            return Err(Error::Dimension {
                what: "covariate names",
                expected: raw.ncols(),
                got: covariate_names.len(),
            });
        }
        validate_response(&y, t)?;
        if n < 2 && raw.ncols() > 0 {
            return Err(Error::Data("need at least two rows to standardize".into()));
        }
        let p = raw.ncols() + 1;
        let mut x = DMatrix::from_element(n, p, 1.0);
        let mut means = vec![0.0; p];
        let mut sds = vec![1.0; p];
        for k in 0..raw.ncols() {
            let col = raw.column(k);
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "covariate '{}' has non-finite values",
                    covariate_names[k]
                )));
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            if sd.is_nan() || sd <= 0.0 {
                return Err(Error::Data(format!(
                    "covariate '{}' is constant and cannot be standardized",
                    covariate_names[k]
                )));
            }
            for i in 0..n {
                x[(i, k + 1)] = (col[i] - mean) / sd;
            }
            means[k + 1] = mean;
            sds[k + 1] = sd;
        }
        let mut column_names = Vec::with_capacity(p);
        column_names.push("intercept".to_string());
        column_names.extend(covariate_names);
        Ok(Self {
            y,
            x,
            raw,
            t,
            column_means: means,
            column_sds: sds,
            column_names,
        })
    }

    /// Accepts an already standardized design; checks every invariant.
    pub fn from_standardized(
        y: Vec<f64>,
        x: DMatrix<f64>,
        t: f64,
        column_means: Vec<f64>,
        column_sds: Vec<f64>,
    ) -> Result<Self> {
        let n = y.len();
        let p = x.ncols();
        if x.nrows() != n {
            return Err(Error::Dimension {
                what: "design rows",
                expected: n,
                got: x.nrows(),
            });
        }
        if p == 0 || column_means.len() != p || column_sds.len() != p {
            return Err(Error::Dimension {
                what: "standardization constants",
                expected: p,
                got: column_means.len().min(column_sds.len()),
            });
        }
        validate_response(&y, t)?;
        if x.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::Data("first design column must be all ones".into()));
        }
        for k in 1..p {
            let col = x.column(k);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            if mean.abs() > STANDARDIZED_TOL || (var - 1.0).abs() > STANDARDIZED_TOL {
                return Err(Error::Data(format!(
                    "design column {k} is not standardized (mean {mean}, variance {var})"
                )));
            }
        }
        let mut raw = DMatrix::zeros(n, p - 1);
        for k in 1..p {
            for i in 0..n {
                raw[(i, k - 1)] = x[(i, k)] * column_sds[k] + column_means[k];
            }
        }
        let mut column_names = vec!["intercept".to_string()];
        column_names.extend((1..p).map(|k| format!("x{k}")));
        Ok(Self {
            y,
            x,
            raw,
            t,
            column_means,
            column_sds,
            column_names,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Covariates as supplied, before standardization (no intercept column).
    pub fn raw_covariates(&self) -> &DMatrix<f64> {
        &self.raw
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_sds(&self) -> &[f64] {
        &self.column_sds
    }

    /// Names of the design columns, starting with `"intercept"`.
    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Maps coefficients on the standardized design to the raw covariate scale,
    /// so that `x_std'β = β_raw[0] + Σ_k β_raw[k]·raw_k`.
    pub fn destandardize(&self, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.p() {
            return Err(Error::Dimension {
                what: "coefficient vector",
                expected: self.p(),
                got: beta.len(),
            });
        }
        let mut out = beta.to_vec();
        for k in 1..self.p() {
            out[k] = beta[k] / self.column_sds[k];
            out[0] -= beta[k] * self.column_means[k] / self.column_sds[k];
        }
        Ok(out)
    }

    /// A copy restricted to the given rows. Standardization constants are kept,
    /// not recomputed, so coefficients stay on the same scale.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            x: self.x.select_rows(rows),
            raw: self.raw.select_rows(rows),
            t: self.t,
            column_means: self.column_means.clone(),
            column_sds: self.column_sds.clone(),
            column_names: self.column_names.clone(),
        }
    }
}

fn validate_response(y: &[f64], t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Data(format!("threshold {t} outside (0, 1)")));
    }
    if y.is_empty() {
        return Err(Error::Data("empty response vector".into()));
    }
    if let Some((i, v)) = y.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Data(format!("response y[{i}] = {v} outside (0, 1)")));
    }
    Ok(())
}

/// Parameters `θ = (γ₁, γ₂, α)` stored contiguously in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    p: usize,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(gamma1: &[f64], gamma2: &[f64], alpha: &[f64]) -> Result<Self> {
        let p = alpha.len();
        if gamma1.len() != p || gamma2.len() != p {
            return Err(Error::Dimension {
                what: "parameter blocks",
                expected: p,
                got: gamma1.len().min(gamma2.len()),
            });
        }
        let mut values = Vec::with_capacity(3 * p);
        values.extend_from_slice(gamma1);
        values.extend_from_slice(gamma2);
        values.extend_from_slice(alpha);
        Ok(Self { p, values })
    }

    pub fn from_flat(p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 3 * p {
            return Err(Error::Dimension {
                what: "flat parameter vector",
                expected: 3 * p,
                got: values.len(),
            });
        }
        Ok(Self { p, values })
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            p,
            values: vec![0.0; 3 * p],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        3 * self.p
    }

    pub fn gamma1(&self) -> &[f64] {
        &self.values[..self.p]
    }

    pub fn gamma2(&self) -> &[f64] {
        &self.values[self.p..2 * self.p]
    }

    pub fn alpha(&self) -> &[f64] {
        &self.values[2 * self.p..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Trimming window `[t − Δ, t + Δ]` and the sample indices it retains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    delta: f64,
    t1: f64,
    t2: f64,
    indices: Vec<usize>,
}

impl Window {
    /// Symmetric window of half-width `delta ∈ (0, min(t, 1 − t)]`.
    pub fn new(data: &Dataset, delta: f64) -> Result<Self> {
        let t = data.threshold();
        let max = t.min(1.0 - t);
        if !(delta > 0.0 && delta <= max + 1e-12) {
            return Err(Error::Config(format!(
                "window half-width {delta} outside (0, {max}] for threshold {t}"
            )));
        }
        let t1 = (t - delta).max(0.0);
        let t2 = (t + delta).min(1.0);
        Ok(Self::from_bounds(data, delta, t1, t2))
    }

    /// The untrimmed model: `[0, 1]`.
    pub fn full(data: &Dataset) -> Self {
        let t = data.threshold();
        Self::from_bounds(data, t.max(1.0 - t), 0.0, 1.0)
    }

    /// A window that retains nothing; only useful for sampling the prior.
    pub fn empty(data: &Dataset) -> Self {
        let t = data.threshold();
        Self {
            delta: t.min(1.0 - t),
            t1: 0.0,
            t2: 1.0,
            indices: Vec::new(),
        }
    }

    fn from_bounds(data: &Dataset, delta: f64, t1: f64, t2: f64) -> Self {
        let indices = data
            .y()
            .iter()
            .enumerate()
            .filter(|(_, &y)| t1 <= y && y <= t2)
            .map(|(i, _)| i)
            .collect();
        Self {
            delta,
            t1,
            t2,
            indices,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Refuses windows whose posterior would be prior-dominated: fewer than `3p`
    /// retained samples, or nothing on one side of the threshold.
    pub fn check_fittable(&self, data: &Dataset) -> Result<()> {
        let need = 3 * data.p();
        let degenerate = |reason: String| Error::DegenerateWindow {
            t1: self.t1,
            t2: self.t2,
            reason,
        };
        if self.len() < need {
            return Err(degenerate(format!(
                "{} samples retained, need at least {need}",
                self.len()
            )));
        }
        let t = data.threshold();
        let below = self.indices.iter().filter(|&&i| data.y()[i] < t).count();
        if below == 0 || below == self.len() {
            return Err(degenerate(format!(
                "{below} of {} retained samples lie below t = {t}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// A dataset restricted to one window, laid out for repeated likelihood
/// evaluation: row-major covariates plus cached `ln y`, `ln(1 − y)` and the
/// below-threshold indicator.
#[derive(Debug, Clone)]
pub struct WindowedModel {
    p: usize,
    t: f64,
    t1: f64,
    t2: f64,
    link: LinkConfig,
    indices: Vec<usize>,
    rows: Vec<f64>,
    ln_y: Vec<f64>,
    ln_1my: Vec<f64>,
    below: Vec<bool>,
}

impl WindowedModel {
    pub fn new(data: &Dataset, window: &Window, link: LinkConfig) -> Self {
        let p = data.p();
        let n = window.len();
        let mut rows = Vec::with_capacity(n * p);
        let mut ln_y = Vec::with_capacity(n);
        let mut ln_1my = Vec::with_capacity(n);
        let mut below = Vec::with_capacity(n);
        for &i in window.indices() {
            rows.extend(data.x().row(i).iter());
            let y = data.y()[i];
            ln_y.push(y.ln());
            ln_1my.push((-y).ln_1p());
            below.push(y < data.threshold());
        }
        Self {
            p,
            t: data.threshold(),
            t1: window.t1(),
            t2: window.t2(),
            link,
            indices: window.indices().to_vec(),
            rows,
            ln_y,
            ln_1my,
            below,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.ln_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_y.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Position of dataset row `i` inside this window.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.indices.binary_search(&i).ok()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != 3 * self.p {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected: 3 * self.p,
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Log-density of the `k`-th retained observation (window position, not dataset index).
    #[inline]
    fn term(&self, theta: &[f64], k: usize) -> Result<f64> {
        let p = self.p;
        let row = &self.rows[k * p..(k + 1) * p];
        let (g1, rest) = theta.split_at(p);
        let (g2, al) = rest.split_at(p);
        let (mut z1, mut z2, mut za) = (0.0, 0.0, 0.0);
        for c in 0..p {
            z1 += row[c] * g1[c];
            z2 += row[c] * g2[c];
            za += row[c] * al[c];
        }
        let a = self.link.apply(z1);
        let b = self.link.apply(z2);
        let j = jump_link(za);
        let ln_c = log_norm_const_trunc_unchecked(self.t, j, a, b, self.t1, self.t2)?;
        let jump = if self.below[k] { j } else { 0.0 };
        Ok((a - 1.0) * self.ln_y[k] + (b - 1.0) * self.ln_1my[k] - jump - ln_c)
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        let mut acc = 0.0;
        for k in 0..self.len() {
            acc += self.term(theta, k)?;
        }
        Ok(acc)
    }

    /// All pointwise log-densities, in window order.
    pub fn pointwise(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        (0..self.len()).map(|k| self.term(theta, k)).collect()
    }

    /// Pointwise log-densities at the given window positions.
    pub fn pointwise_at(&self, theta: &[f64], positions: &[usize]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        positions.iter().map(|&k| self.term(theta, k)).collect()
    }

    /// Log-density of dataset row `i`, which must lie in the window.
    pub fn log_density(&self, theta: &[f64], i: usize) -> Result<f64> {
        self.check_theta(theta)?;
        let k = self
            .position(i)
            .ok_or_else(|| Error::Domain(format!("sample {i} is outside the window")))?;
        self.term(theta, k)
    }
}

/// Log-density of `y` given a covariate row `x` on `[t1, t2]`, for an arbitrary
/// point rather than a stored observation.
pub fn conditional_log_density(
    theta: &ParamVector,
    x: &[f64],
    y: f64,
    t: f64,
    t1: f64,
    t2: f64,
    link: &LinkConfig,
) -> Result<f64> {
    if x.len() != theta.p() {
        return Err(Error::Dimension {
            what: "covariate row width",
            expected: theta.p(),
            got: x.len(),
        });
    }
    if !(0.0 <= t1 && t1 <= t && t <= t2 && t2 <= 1.0 && t1 < t2) {
        return Err(Error::Domain(format!(
            "need 0 <= t1 <= t <= t2 <= 1, got t1 = {t1}, t = {t}, t2 = {t2}"
        )));
    }
    if !(t1 <= y && y <= t2 && y > 0.0 && y < 1.0) {
        return Err(Error::Domain(format!(
            "y = {y} outside [{t1}, {t2}] ∩ (0, 1)"
        )));
    }
    let dot = |v: &[f64]| x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let a = link.apply(dot(theta.gamma1()));
    let b = link.apply(dot(theta.gamma2()));
    let j = jump_link(dot(theta.alpha()));
    let ln_c = log_norm_const_trunc_unchecked(t, j, a, b, t1, t2)?;
    let jump = if y < t { j } else { 0.0 };
    Ok((a - 1.0) * y.ln() + (b - 1.0) * (-y).ln_1p() - jump - ln_c)
}

/// `(x'α)₊` for every row of `rows` (each of width `p`).
pub fn jump_surface(theta: &ParamVector, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
    if rows.ncols() != theta.p() {
        return Err(Error::Dimension {
            what: "covariate row width",
            expected: theta.p(),
            got: rows.ncols(),
        });
    }
    let alpha = theta.alpha();
    Ok(rows
        .row_iter()
        .map(|r| jump_link(r.iter().zip(alpha).map(|(x, a)| x * a).sum()))
        .collect())
}

pub fn log_likelihood(theta: &ParamVector, data: &Dataset, w: &Window) -> Result<f64> {
    check_p(theta, data)?;
    WindowedModel::new(data, w, LinkConfig::default()).log_likelihood(theta.as_slice())
}

/// Independent Gaussian prior: `α_k ~ N(0, 1)`, `γ_{1,k}, γ_{2,k} ~ N(0, 1/p)`,
/// including the normalizing constants.
pub fn log_prior(theta: &[f64], p: usize) -> Result<f64> {
    if theta.len() != 3 * p {
        return Err(Error::Dimension {
            what: "parameter vector",
            expected: 3 * p,
            got: theta.len(),
        });
    }
    let pf = p as f64;
    let gamma_sq: f64 = theta[..2 * p].iter().map(|v| v * v).sum();
    let alpha_sq: f64 = theta[2 * p..].iter().map(|v| v * v).sum();
    let ln_norm = -1.5 * pf * (2.0 * std::f64::consts::PI).ln() + pf * pf.ln();
    Ok(ln_norm - 0.5 * (alpha_sq + pf * gamma_sq))
}

pub fn log_posterior_unnorm(theta: &ParamVector, data: &Dataset, w: &Window) -> Result<f64> {
    Ok(log_likelihood(theta, data, w)? + log_prior(theta.as_slice(), theta.p())?)
}

pub fn log_density_pointwise(
    theta: &ParamVector,
    data: &Dataset,
    w: &Window,
    i: usize,
) -> Result<f64> {
    check_p(theta, data)?;
    if !w.contains(i) {
        return Err(Error::Domain(format!("sample {i} is outside the window")));
    }
    let single = Window {
        delta: w.delta,
        t1: w.t1,
        t2: w.t2,
        indices: vec![i],
    };
    WindowedModel::new(data, &single, LinkConfig::default()).log_likelihood(theta.as_slice())
}

fn check_p(theta: &ParamVector, data: &Dataset) -> Result<()> {
    if theta.p() != data.p() {
        return Err(Error::Dimension {
            what: "parameter block width",
            expected: data.p(),
            got: theta.p(),
        });
    }
    Ok(())
}
