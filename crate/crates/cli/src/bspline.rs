//! Cubic B-spline covariate expansion.
//!
//! `df` columns: the full basis over knots `[min; k+1] ∪ interior ∪ [max; k+1]`
//! has `df + 1` functions and the first one is dropped, leaving the intercept to
//! absorb the partition of unity. Interior knots sit at equally spaced sample
//! quantiles. For `df = 2` the degree drops to 2 because a cubic would need
//! fewer than zero interior knots.

use ddreg_core::{Error, Result};
use nalgebra::DMatrix;

pub const MAX_DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SplineKnots {
    pub degree: usize,
    /// Full knot vector with boundary knots repeated `degree + 1` times.
    pub knots: Vec<f64>,
}

impl SplineKnots {
    pub fn for_column(column: &[f64], df: usize) -> Result<Self> {
        if df < 2 {
            return Err(Error::Config(format!(
                "bspline df must be at least 2, got {df}"
            )));
        }
        if column.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("bspline input has non-finite values".into()));
        }
        let mut sorted = column.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut distinct = sorted.clone();
        distinct.dedup();
        if distinct.len() < df.max(2) {
            return Err(Error::Data(format!(
                "bspline with df = {df} needs at least {} distinct values, got {}",
                df.max(2),
                distinct.len()
            )));
        }
        let degree = df.min(MAX_DEGREE);
        let n_interior = df - degree;
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        let mut knots = vec![lo; degree + 1];
        for k in 1..=n_interior {
            let q = k as f64 / (n_interior + 1) as f64;
            knots.push(quantile7(&sorted, q));
        }
        knots.extend(std::iter::repeat(hi).take(degree + 1));
        Ok(Self { degree, knots })
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn lower(&self) -> f64 {
        self.knots[0]
    }

    pub fn upper(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// All basis values at `x`, clamped to the boundary knots.
    pub fn evaluate(&self, x: f64) -> Vec<f64> {
        let k = self.degree;
        let t = &self.knots;
        let m = self.n_basis();
        let x = x.clamp(self.lower(), self.upper());
        // knot span: largest s with t[s] <= x < t[s+1], right end folded into the last span
        let mut s = k;
        while s + 1 < m && t[s + 1] <= x {
            s += 1;
        }
        // triangular de Boor table for the k+1 nonzero functions N_{s-k..=s}
        let mut n = vec![0.0; k + 1];
        n[0] = 1.0;
        let mut left = vec![0.0; k + 1];
        let mut right = vec![0.0; k + 1];
        for d in 1..=k {
            left[d] = x - t[s + 1 - d];
            right[d] = t[s + d] - x;
            let mut saved = 0.0;
            for r in 0..d {
                let denom = right[r + 1] + left[d - r];
                let tmp = if denom > 0.0 { n[r] / denom } else { 0.0 };
                n[r] = saved + right[r + 1] * tmp;
                saved = left[d - r] * tmp;
            }
            n[d] = saved;
        }
        let mut out = vec![0.0; m];
        out[s - k..=s].copy_from_slice(&n);
        out
    }
}

fn quantile7(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Full basis (`df + 1` columns), rows summing to one.
pub fn bspline_full_basis(column: &[f64], df: usize) -> Result<DMatrix<f64>> {
    let knots = SplineKnots::for_column(column, df)?;
    let m = knots.n_basis();
    let mut out = DMatrix::zeros(column.len(), m);
    for (i, &x) in column.iter().enumerate() {
        for (j, v) in knots.evaluate(x).into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// `df` columns, first basis function removed.
pub fn bspline_basis(column: &[f64], df: usize) -> Result<DMatrix<f64>> {
    let full = bspline_full_basis(column, df)?;
    Ok(full.columns(1, df).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_rejected() {
        assert!(matches!(bspline_basis(&[2.0; 10], 3), Err(Error::Data(_))));
    }

    #[test]
    fn df_below_two_rejected() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(matches!(bspline_basis(&x, 1), Err(Error::Config(_))));
    }

    #[test]
    fn shapes() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sqrt()).collect();
        for df in 2..7 {
            let b = bspline_basis(&x, df).unwrap();
            assert_eq!(b.shape(), (50, df));
        }
    }

    #[test]
    fn interior_knots_at_quantiles() {
        let x: Vec<f64> = (0..=100).map(f64::from).collect();
        let k = SplineKnots::for_column(&x, 5).unwrap();
        let want = [
            0.0,
            0.0,
            0.0,
            0.0,
            100.0 / 3.0,
            200.0 / 3.0,
            100.0,
            100.0,
            100.0,
            100.0,
        ];
        assert_eq!(k.knots.len(), want.len());
        for (a, b) in k.knots.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn right_end_belongs_to_last_function() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let k = SplineKnots::for_column(&x, 4).unwrap();
        let v = k.evaluate(19.0);
        assert_eq!(v[v.len() - 1], 1.0);
        assert!(v[..v.len() - 1].iter().all(|&a| a == 0.0));
    }
}
