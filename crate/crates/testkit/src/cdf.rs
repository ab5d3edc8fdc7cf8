//! Tabulated CDFs built by quadrature, with inverse-CDF sampling.

use crate::quad::tanh_sinh;

/// Piecewise-linear CDF over `[lo, hi]` from an unnormalized density.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    knots: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedCdf {
    /// `breaks` are points where the density may be discontinuous; they are
    /// forced onto the knot grid so no cell straddles a jump.
    pub fn from_density<F>(density: F, lo: f64, hi: f64, cells: usize, breaks: &[f64]) -> Self
    where
        F: Fn(f64, f64, f64) -> f64,
    {
        let mut knots: Vec<f64> = (0..=cells)
            .map(|k| lo + (hi - lo) * k as f64 / cells as f64)
            .collect();
        knots.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let mut cumulative = Vec::with_capacity(knots.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            // Pass distances to the global endpoints so singular kernels stay accurate.
            let mass = tanh_sinh(
                |x, dl, dr| density(x, (a - lo) + dl, (hi - b) + dr),
                a,
                b,
                1e-10,
            );
            acc += mass;
            cumulative.push(acc);
        }
        Self { knots, cumulative }
    }

    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Normalized CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.knots[0] {
            return 0.0;
        }
        if x >= *self.knots.last().unwrap() {
            return 1.0;
        }
        let k = self.knots.partition_point(|&v| v <= x) - 1;
        let frac = (x - self.knots[k]) / (self.knots[k + 1] - self.knots[k]);
        let c = self.cumulative[k] + frac * (self.cumulative[k + 1] - self.cumulative[k]);
        c / self.total_mass()
    }

    /// Inverse CDF at `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u * self.total_mass();
        let k = self
            .cumulative
            .partition_point(|&c| c < target)
            .clamp(1, self.knots.len() - 1);
        let (c0, c1) = (self.cumulative[k - 1], self.cumulative[k]);
        let frac = if c1 > c0 {
            (target - c0) / (c1 - c0)
        } else {
            0.0
        };
        self.knots[k - 1] + frac * (self.knots[k] - self.knots[k - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_density() {
        let t = TabulatedCdf::from_density(|_, _, _| 2.0, 0.0, 1.0, 100, &[]);
        assert!((t.total_mass() - 2.0).abs() < 1e-12);
        assert!((t.cdf(0.3) - 0.3).abs() < 1e-12);
        assert!((t.quantile(0.7) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn step_density_break_is_respected() {
        let t = TabulatedCdf::from_density(
            |x, _, _| if x < 0.5 { 1.0 } else { 3.0 },
            0.0,
            1.0,
            7,
            &[0.5],
        );
        assert!((t.cdf(0.5) - 0.25).abs() < 1e-12);
    }
}
