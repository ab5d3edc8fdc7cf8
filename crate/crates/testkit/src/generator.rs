//! Quadrature-normalized response densities of the synthetic generator.

use crate::cdf::TabulatedCdf;
use crate::quad::beta_kernel_integral;

/// Base density `(1 − w)·Be(a, b) + w·Be(ca, cb)` tilted by `exp(−K(t − y)·j)`.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorOracle {
    pub a: f64,
    pub b: f64,
    pub j: f64,
    pub t: f64,
    /// Contaminant weight and shapes; `None` for a plain beta base.
    pub mixture: Option<(f64, f64, f64)>,
    /// `None` for the sharp indicator kernel, `Some(r)` for `exp(−r u²)` on `u ≥ 0`.
    pub decay_rate: Option<f64>,
}

impl GeneratorOracle {
    fn kernel(&self, u: f64) -> f64 {
        if u < 0.0 {
            0.0
        } else {
            match self.decay_rate {
                None => 1.0,
                Some(r) => (-r * u * u).exp(),
            }
        }
    }

    /// Unnormalized density; `y` and `1 − y` are passed separately for accuracy.
    pub fn density(&self, y: f64, one_minus_y: f64) -> f64 {
        let beta_pdf = |a: f64, b: f64| {
            ((a - 1.0) * y.ln() + (b - 1.0) * one_minus_y.ln()).exp()
                / beta_kernel_integral(a, b, 0.0, 1.0)
        };
        let base = match self.mixture {
            None => beta_pdf(self.a, self.b),
            Some((w, ca, cb)) => (1.0 - w) * beta_pdf(self.a, self.b) + w * beta_pdf(ca, cb),
        };
        base * (-self.kernel(self.t - y) * self.j).exp()
    }

    /// Tabulated CDF with extra knots near both endpoints and at `t`.
    pub fn tabulate(&self, cells: usize) -> TabulatedCdf {
        let norm_a = beta_kernel_integral(self.a, self.b, 0.0, 1.0);
        let norm_c = self
            .mixture
            .map(|(_, ca, cb)| beta_kernel_integral(ca, cb, 0.0, 1.0));
        let me = *self;
        let density = move |_: f64, dl: f64, dr: f64| {
            let pdf = |a: f64, b: f64, norm: f64| {
                ((a - 1.0) * dl.ln() + (b - 1.0) * dr.ln()).exp() / norm
            };
            let base = match (me.mixture, norm_c) {
                (Some((w, ca, cb)), Some(nc)) => {
                    (1.0 - w) * pdf(me.a, me.b, norm_a) + w * pdf(ca, cb, nc)
                }
                _ => pdf(me.a, me.b, norm_a),
            };
            base * (-me.kernel(me.t - dl) * me.j).exp()
        };
        let mut breaks = vec![self.t];
        for k in 4..=240 {
            let e = 10f64.powf(-(k as f64) / 4.0);
            breaks.push(e);
            breaks.push(1.0 - e);
        }
        TabulatedCdf::from_density(density, 0.0, 1.0, cells, &breaks)
    }
}
