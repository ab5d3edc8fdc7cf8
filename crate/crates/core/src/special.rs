//! Log-beta, the regularized incomplete beta function, and the normalizing
//! constants of a beta kernel with a multiplicative jump `e^{-j}` below `t`.
//!
//! Every likelihood evaluation in the sampler goes through
//! [`log_norm_const_trunc`], so the incomplete beta is evaluated once per
//! window edge per observation. `I_x(a, b)` uses the Lentz continued fraction
//! on whichever tail converges quickly; the other tail is its complement.
//! Interval masses are formed from the better-conditioned tail so that narrow
//! windows deep in a tail keep their relative precision.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const CF_MAX_ITER: usize = 300;
const CF_REL_TOL: f64 = 1e-12;
const CF_TINY: f64 = 1e-300;

/// Beta shape parameters `(a, b)`, both strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePair {
    pub a: f64,
    pub b: f64,
}

impl ShapePair {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let s = Self { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Domain(format!(
                "beta shapes must be positive and finite, got ({}, {})",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

/// Lower and upper tail probabilities of `Be(a, b)` at a point.
#[derive(Debug, Clone, Copy)]
struct Tails {
    lower: f64,
    upper: f64,
}

/// `ln B(a, b)`.
pub fn log_beta(s: ShapePair) -> Result<f64> {
    s.validate()?;
    Ok(log_beta_unchecked(s.a, s.b))
}

#[inline]
pub(crate) fn log_beta_unchecked(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `I_x(a, b)`, the `Be(a, b)` CDF at `x`.
pub fn reg_inc_beta(x: f64, s: ShapePair) -> Result<f64> {
    s.validate()?;
    check_unit(x, "x")?;
    Ok(tails(x, s.a, s.b, log_beta_unchecked(s.a, s.b))?.lower)
}

/// `ln c(t; j, a, b)` with `c = ∫_0^1 y^{a-1}(1-y)^{b-1} e^{-j·I(y<t)} dy`.
pub fn log_norm_const(t: f64, j: f64, s: ShapePair) -> Result<f64> {
    s.validate()?;
    check_threshold(t)?;
    check_jump(j)?;
    let ln_b = log_beta_unchecked(s.a, s.b);
    let at_t = tails(t, s.a, s.b, ln_b)?;
    Ok(ln_b + ln_jump_factor(j, at_t))
}

/// `ln c(t; j, a, b, t1, t2)`: the same integral restricted to `[t1, t2]`.
pub fn log_norm_const_trunc(t: f64, j: f64, s: ShapePair, t1: f64, t2: f64) -> Result<f64> {
    s.validate()?;
    check_jump(j)?;
    check_unit(t1, "t1")?;
    check_unit(t2, "t2")?;
    if !(t1 < t2 && t1 <= t && t <= t2) {
        return Err(Error::Domain(format!(
            "need t1 <= t <= t2 with t1 < t2, got t1 = {t1}, t = {t}, t2 = {t2}"
        )));
    }
    log_norm_const_trunc_unchecked(t, j, s.a, s.b, t1, t2)
}

/// Hot-path variant: the caller guarantees valid shapes and `0 <= t1 <= t <= t2 <= 1`.
#[inline]
pub(crate) fn log_norm_const_trunc_unchecked(
    t: f64,
    j: f64,
    a: f64,
    b: f64,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let ln_b = log_beta_unchecked(a, b);
    let full = t1 <= 0.0 && t2 >= 1.0;
    if full && j == 0.0 {
        return Ok(ln_b);
    }
    let at_t = tails(t, a, b, ln_b)?;
    if full {
        return Ok(ln_b + ln_jump_factor(j, at_t));
    }
    let at_t1 = tails(t1, a, b, ln_b)?;
    let at_t2 = tails(t2, a, b, ln_b)?;
    let right = mass_between(at_t, at_t2);
    let left = mass_between(at_t1, at_t);
    Ok(ln_b + (right + (-j).exp() * left).ln())
}

/// `ln{1 - (1 - e^{-j}) I_t}`, switching to `log1p` when the factor is near one.
#[inline]
fn ln_jump_factor(j: f64, at_t: Tails) -> f64 {
    let delta = (-j).exp_m1() * at_t.lower;
    if delta > -0.5 {
        delta.ln_1p()
    } else {
        (at_t.upper + (-j).exp() * at_t.lower).ln()
    }
}

/// Probability mass between two points given their tails, taken as a difference of
/// whichever tail is smaller so that cancellation is confined to small numbers.
#[inline]
fn mass_between(lo: Tails, hi: Tails) -> f64 {
    let m = if hi.lower <= lo.upper {
        hi.lower - lo.lower
    } else {
        lo.upper - hi.upper
    };
    m.max(0.0)
}

fn tails(x: f64, a: f64, b: f64, ln_b: f64) -> Result<Tails> {
    if x <= 0.0 {
        return Ok(Tails {
            lower: 0.0,
            upper: 1.0,
        });
    }
    if x >= 1.0 {
        return Ok(Tails {
            lower: 1.0,
            upper: 0.0,
        });
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_b;
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = (ln_front.exp() * continued_fraction(x, a, b)? / a).min(1.0);
        Ok(Tails {
            lower,
            upper: 1.0 - lower,
        })
    } else {
        let upper = (ln_front.exp() * continued_fraction(1.0 - x, b, a)? / b).min(1.0);
        Ok(Tails {
            lower: 1.0 - upper,
            upper,
        })
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_REL_TOL {
            return Ok(h);
        }
    }
    Err(Error::Convergence {
        x,
        a,
        b,
        iters: CF_MAX_ITER,
    })
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{what} = {x} outside [0, 1]")));
    }
    Ok(())
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("threshold t = {t} outside (0, 1)")));
    }
    Ok(())
}

fn check_jump(j: f64) -> Result<()> {
    if !(j >= 0.0 && j.is_finite()) {
        return Err(Error::Domain(format!(
            "jump j = {j} must be finite and >= 0"
        )));
    }
    Ok(())
}

fn check_aligned(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Element-wise [`log_beta`].
pub fn log_beta_batch(shapes: &[ShapePair]) -> Result<Vec<f64>> {
    shapes.iter().map(|&s| log_beta(s)).collect()
}

/// Element-wise [`reg_inc_beta`] over aligned `xs` and `shapes`.
pub fn reg_inc_beta_batch(xs: &[f64], shapes: &[ShapePair]) -> Result<Vec<f64>> {
    check_aligned("shapes", xs.len(), shapes.len())?;
    xs.iter()
        .zip(shapes)
        .map(|(&x, &s)| reg_inc_beta(x, s))
        .collect()
}

/// Element-wise [`log_norm_const`] at a common threshold.
pub fn log_norm_const_batch(t: f64, jumps: &[f64], shapes: &[ShapePair]) -> Result<Vec<f64>> {
    check_aligned("shapes", jumps.len(), shapes.len())?;
    jumps
        .iter()
        .zip(shapes)
        .map(|(&j, &s)| log_norm_const(t, j, s))
        .collect()
}

/// Element-wise [`log_norm_const_trunc`] at a common threshold and window.
pub fn log_norm_const_trunc_batch(
    t: f64,
    jumps: &[f64],
    shapes: &[ShapePair],
    t1: f64,
    t2: f64,
) -> Result<Vec<f64>> {
    check_aligned("shapes", jumps.len(), shapes.len())?;
    jumps
        .iter()
        .zip(shapes)
        .map(|(&j, &s)| log_norm_const_trunc(t, j, s, t1, t2))
        .collect()
}
