//! Binary-outcome baselines: trim to `[t − Δ, t + Δ]`, set `y* = I(y ≥ t)` and
//! regress `y*` on the design by logistic regression or least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Window};
use crate::sampler::CoefSummary;

pub const IRLS_TOL: f64 = 1e-10;
pub const IRLS_MAX_ITER: usize = 100;
pub const SEPARATION_LIMIT: f64 = 1e3;
const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorMethod {
    Logistic,
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorFit {
    pub method: BorMethod,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub ci95: Vec<(f64, f64)>,
    pub n_trimmed: usize,
    pub iterations: usize,
}

impl BorFit {
    fn new(
        method: BorMethod,
        beta: &DVector<f64>,
        se: Vec<f64>,
        n: usize,
        iterations: usize,
    ) -> Self {
        let coefficients: Vec<f64> = beta.iter().copied().collect();
        let ci95 = coefficients
            .iter()
            .zip(&se)
            .map(|(b, s)| (b - Z95 * s, b + Z95 * s))
            .collect();
        Self {
            method,
            coefficients,
            standard_errors: se,
            ci95,
            n_trimmed: n,
            iterations,
        }
    }

    /// Estimates with their Wald intervals in the sampler's summary form.
    pub fn summaries(&self) -> Vec<CoefSummary> {
        self.coefficients
            .iter()
            .zip(&self.ci95)
            .map(|(&estimate, &(lo95, hi95))| CoefSummary {
                estimate,
                lo95,
                hi95,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trimmed {
    pub indices: Vec<usize>,
    pub x: DMatrix<f64>,
    pub ystar: Vec<f64>,
}

pub fn trim_binarize(data: &Dataset, delta: f64) -> Result<Trimmed> {
    let w = Window::new(data, delta)?;
    if w.is_empty() {
        return Err(Error::Data(format!(
            "no samples within {delta} of the threshold"
        )));
    }
    let t = data.threshold();
    let ystar: Vec<f64> = w
        .indices()
        .iter()
        .map(|&i| if data.y()[i] >= t { 1.0 } else { 0.0 })
        .collect();
    let ones = ystar.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == ystar.len() {
        return Err(Error::Data(format!(
            "trimmed outcome has a single class ({ones} of {} above t)",
            ystar.len()
        )));
    }
    Ok(Trimmed {
        x: data.x().select_rows(w.indices()),
        indices: w.indices().to_vec(),
        ystar,
    })
}

fn check_shapes(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension {
            what: "outcome length",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() < x.ncols() {
        return Err(Error::RankDeficient);
    }
    Ok(())
}

/// Inverse of a symmetric positive definite matrix, or a rank error.
fn spd_inverse(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let chol = m.cholesky().ok_or(Error::RankDeficient)?;
    let l = chol.l_dirty();
    let min_pivot = l
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min_pivot * min_pivot <= 1e-12 * scale {
        return Err(Error::RankDeficient);
    }
    Ok(chol.inverse())
}

/// Maximum likelihood logistic regression by iteratively reweighted least
/// squares from β = 0, with Wald standard errors.
pub fn fit_logistic(x: &DMatrix<f64>, ystar: &[f64]) -> Result<BorFit> {
    check_shapes(x, ystar)?;
    let (n, p) = x.shape();
    spd_inverse(x.transpose() * x)?;
    let y = DVector::from_column_slice(ystar);
    let mut beta = DVector::zeros(p);
    let mut iterations = 0;
    let info_at = |beta: &DVector<f64>| -> (DMatrix<f64>, DVector<f64>) {
        let eta = x * beta;
        let prob = eta.map(logistic);
        let mut weighted = x.clone();
        for i in 0..n {
            let w = prob[i] * (1.0 - prob[i]);
            weighted.row_mut(i).scale_mut(w);
        }
        (x.transpose() * weighted, prob)
    };
    for it in 1..=IRLS_MAX_ITER {
        iterations = it;
        let (info, prob) = info_at(&beta);
        let score = x.transpose() * (&y - prob);
        let step = info
            .cholesky()
            .ok_or(Error::Separation {
                limit: SEPARATION_LIMIT,
            })?
            .solve(&score);
        beta += &step;
        if !beta.iter().all(|v| v.is_finite()) || beta.norm() > SEPARATION_LIMIT {
            return Err(Error::Separation {
                limit: SEPARATION_LIMIT,
            });
        }
        if step.amax() < IRLS_TOL {
            break;
        }
    }
    let (info, _) = info_at(&beta);
    let cov = spd_inverse(info).map_err(|_| Error::Separation {
        limit: SEPARATION_LIMIT,
    })?;
    let se = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    Ok(BorFit::new(BorMethod::Logistic, &beta, se, n, iterations))
}

/// Ordinary least squares with classical standard errors.
pub fn fit_ols(x: &DMatrix<f64>, ystar: &[f64]) -> Result<BorFit> {
    check_shapes(x, ystar)?;
    let (n, p) = x.shape();
    let xtx_inv = spd_inverse(x.transpose() * x)?;
    let y = DVector::from_column_slice(ystar);
    let beta = &xtx_inv * (x.transpose() * &y);
    let resid = &y - x * &beta;
    let dof = n.saturating_sub(p);
    let sigma2 = if dof > 0 {
        resid.norm_squared() / dof as f64
    } else {
        f64::NAN
    };
    let se = xtx_inv
        .diagonal()
        .iter()
        .map(|v| (sigma2 * v).sqrt())
        .collect();
    Ok(BorFit::new(BorMethod::LeastSquares, &beta, se, n, 1))
}

pub fn fit_trimmed(data: &Dataset, delta: f64, method: BorMethod) -> Result<BorFit> {
    let tr = trim_binarize(data, delta)?;
    match method {
        BorMethod::Logistic => fit_logistic(&tr.x, &tr.ystar),
        BorMethod::LeastSquares => fit_ols(&tr.x, &tr.ystar),
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCoefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub lo95: f64,
    pub hi95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub method: BorMethod,
    pub delta: f64,
    pub n_trimmed: usize,
    pub coefficients: Vec<BaselineCoefficient>,
}

impl BaselineReport {
    pub fn new(fit: &BorFit, delta: f64, names: &[String]) -> Self {
        Self {
            method: fit.method,
            delta,
            n_trimmed: fit.n_trimmed,
            coefficients: (0..fit.coefficients.len())
                .map(|k| BaselineCoefficient {
                    name: names.get(k).cloned().unwrap_or_else(|| format!("x{k}")),
                    estimate: fit.coefficients[k],
                    std_error: fit.standard_errors[k],
                    lo95: fit.ci95[k].0,
                    hi95: fit.ci95[k].1,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn intercept(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    #[test]
    fn trim_example() {
        let raw = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 4.0]);
        let d = Dataset::from_raw(vec![0.41, 0.52, 0.9], raw, 0.5).unwrap();
        let tr = trim_binarize(&d, 0.1).unwrap();
        assert_eq!(tr.indices, vec![0, 1]);
        assert_eq!(tr.ystar, vec![0.0, 1.0]);
        assert_eq!(trim_binarize(&d, 0.5).unwrap().indices, vec![0, 1, 2]);
        assert!(trim_binarize(&d, 0.05).is_err());
    }

    #[test]
    fn single_class_refused() {
        let raw = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 4.0]);
        let d = Dataset::from_raw(vec![0.55, 0.52, 0.9], raw, 0.5).unwrap();
        assert!(matches!(trim_binarize(&d, 0.5), Err(Error::Data(_))));
    }

    #[test]
    fn intercept_only_logistic() {
        let y = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let f = fit_logistic(&intercept(6), &y).unwrap();
        assert!(f.coefficients[0].abs() < 1e-12);
        let y = [1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let f = fit_logistic(&intercept(8), &y).unwrap();
        assert!((f.coefficients[0] - 3f64.ln()).abs() < 1e-10);
        // Wald se for the intercept: 1/sqrt(n p (1-p))
        assert!((f.standard_errors[0] - 1.0 / (8.0f64 * 0.75 * 0.25).sqrt()).abs() < 1e-10);
        let (lo, hi) = f.ci95[0];
        assert!((hi - lo - 2.0 * 1.96 * f.standard_errors[0]).abs() < 1e-12);
    }

    #[test]
    fn separation_reported() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, -2.0, 1.0, -1.0, 1.0, 1.0, 1.0, 2.0]);
        let y = [0.0, 0.0, 1.0, 1.0];
        assert!(matches!(
            fit_logistic(&x, &y),
            Err(Error::Separation { .. })
        ));
    }

    #[test]
    fn rank_deficiency_reported() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            fit_ols(&x, &[0.0, 1.0, 0.0, 1.0]),
            Err(Error::RankDeficient)
        ));
        assert!(matches!(
            fit_logistic(&x, &[0.0, 1.0, 0.0, 1.0]),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn ols_intercept_only_is_mean() {
        let y = [1.0, 0.0, 1.0, 1.0, 0.0];
        let f = fit_ols(&intercept(5), &y).unwrap();
        assert!((f.coefficients[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ols_orthogonal_design() {
        // Columns are mutually orthogonal: normal equations decouple into
        // β_k = <x_k, y> / <x_k, x_k>.
        let x = DMatrix::from_row_slice(
            4,
            3,
            &[
                1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0,
            ],
        );
        let y = [1.0, 0.0, 1.0, 1.0];
        let f = fit_ols(&x, &y).unwrap();
        let oracle: Vec<f64> = (0..3)
            .map(|k| {
                let c = x.column(k);
                c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / c.norm_squared()
            })
            .collect();
        for (c, o) in f.coefficients.iter().zip(&oracle) {
            assert!((c - o).abs() < 1e-10);
        }
    }

    fn random_design(seed: u64, n: usize) -> (DMatrix<f64>, Vec<f64>) {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(seed, 0);
        let x = DMatrix::from_fn(n, 3, |_, k| {
            if k == 0 {
                1.0
            } else {
                rng.random::<f64>() * 4.0 - 2.0
            }
        });
        let y = (0..n)
            .map(|i| {
                let eta = 0.3 + 0.8 * x[(i, 1)] - 0.5 * x[(i, 2)];
                if rng.random::<f64>() < logistic(eta) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        (x, y)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn irls_solves_score_equations(seed in 0u64..10_000) {
            let (x, y) = random_design(seed, 200);
            let f = fit_logistic(&x, &y).unwrap();
            let beta = DVector::from_vec(f.coefficients.clone());
            let prob = (&x * beta).map(logistic);
            let score = x.transpose() * (DVector::from_vec(y) - prob);
            prop_assert!(score.amax() < 1e-8);
        }

        #[test]
        fn ols_residuals_orthogonal(seed in 0u64..10_000) {
            let (x, y) = random_design(seed, 100);
            let f = fit_ols(&x, &y).unwrap();
            let resid = DVector::from_vec(y) - &x * DVector::from_vec(f.coefficients);
            prop_assert!((x.transpose() * resid).amax() < 1e-10);
        }

        #[test]
        fn column_shift_moves_only_intercept(seed in 0u64..10_000, c in -3.0f64..3.0) {
            let (x, y) = random_design(seed, 200);
            let mut shifted = x.clone();
            for i in 0..x.nrows() {
                shifted[(i, 1)] += c;
            }
            let a = fit_logistic(&x, &y).unwrap();
            let b = fit_logistic(&shifted, &y).unwrap();
            prop_assert!((a.coefficients[1] - b.coefficients[1]).abs() < 1e-8);
            prop_assert!((a.coefficients[2] - b.coefficients[2]).abs() < 1e-8);
            prop_assert!((b.coefficients[0] - (a.coefficients[0] - c * a.coefficients[1])).abs() < 1e-8);
        }
    }
}
