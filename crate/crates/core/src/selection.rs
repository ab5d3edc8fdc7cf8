//! Window selection by WAIC evaluated on a subset common to every window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, LinkConfig, Window, WindowedModel};
use crate::sampler::{run_chain_model, summarize, ChainConfig, PosteriorDraws, ThetaSummary};

pub const DEFAULT_DELTAS: [f64; 4] = [0.5, 0.4, 0.25, 0.1];

/// Candidate half-widths, stored in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DeltaGrid {
    deltas: Vec<f64>,
}

impl Default for DeltaGrid {
    fn default() -> Self {
        Self {
            deltas: DEFAULT_DELTAS.to_vec(),
        }
    }
}

impl TryFrom<Vec<f64>> for DeltaGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DeltaGrid> for Vec<f64> {
    fn from(g: DeltaGrid) -> Self {
        g.deltas
    }
}

impl DeltaGrid {
    pub fn new(mut deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::Config("delta grid is empty".into()));
        }
        if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::Config(format!("delta {d} must be positive")));
        }
        deltas.sort_by(|a, b| b.total_cmp(a));
        if deltas.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!(
                "delta grid has duplicates: {deltas:?}"
            )));
        }
        Ok(Self { deltas })
    }

    /// Checks every half-width fits inside `(0, min(t, 1 − t)]`.
    pub fn validate_for(&self, t: f64) -> Result<()> {
        let max = t.min(1.0 - t);
        match self.deltas.iter().find(|&&d| d > max + 1e-12) {
            Some(d) => Err(Error::Config(format!(
                "delta {d} exceeds min(t, 1 - t) = {max}"
            ))),
            None => Ok(()),
        }
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn smallest(&self) -> f64 {
        *self.deltas.last().expect("nonempty grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaicReport {
    pub fit_term: f64,
    pub complexity_term: f64,
    pub total: f64,
    pub subset_size: usize,
}

/// Indices of the samples inside the smallest window of the grid.
pub fn common_subset(data: &Dataset, grid: &DeltaGrid) -> Result<Vec<usize>> {
    grid.validate_for(data.threshold())?;
    let w = Window::new(data, grid.smallest())?;
    if w.is_empty() {
        return Err(Error::Data(format!(
            "no samples within {} of the threshold",
            grid.smallest()
        )));
    }
    Ok(w.indices().to_vec())
}

/// WAIC from per-draw pointwise log densities, `log_dens[m][i]` for draw `m`
/// and subset observation `i`.
pub fn waic_from_log_densities(log_dens: &[Vec<f64>]) -> Result<WaicReport> {
    let m = log_dens.len();
    if m == 0 {
        return Err(Error::Data("no posterior draws".into()));
    }
    let s = log_dens[0].len();
    if log_dens.iter().any(|r| r.len() != s) {
        return Err(Error::Dimension {
            what: "pointwise log densities per draw",
            expected: s,
            got: log_dens.iter().map(Vec::len).find(|&l| l != s).unwrap_or(s),
        });
    }
    let mut fit = 0.0;
    let mut complexity = 0.0;
    for i in 0..s {
        let col = log_dens.iter().map(|r| r[i]);
        let mut max = f64::NEG_INFINITY;
        let mut mean = 0.0;
        for (k, v) in col.clone().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "log density of subset observation {i} at draw {k} is {v}"
                )));
            }
            max = max.max(v);
            mean += v;
        }
        mean /= m as f64;
        let sum_exp: f64 = col.clone().map(|v| (v - max).exp()).sum();
        fit += max + (sum_exp / m as f64).ln();
        if m > 1 {
            let ss: f64 = col.map(|v| (v - mean).powi(2)).sum();
            complexity += ss / (m - 1) as f64;
        }
    }
    let fit_term = -2.0 * fit;
    let complexity_term = 2.0 * complexity;
    Ok(WaicReport {
        fit_term,
        complexity_term,
        total: fit_term + complexity_term,
        subset_size: s,
    })
}

/// WAIC of `draws` summed over the dataset indices `subset`, with pointwise
/// densities normalized over `w`. Adaptive selection passes the smallest
/// window here for every candidate so the scores share one scale.
pub fn waic(
    draws: &PosteriorDraws,
    data: &Dataset,
    w: &Window,
    subset: &[usize],
) -> Result<WaicReport> {
    let model = WindowedModel::new(data, w, LinkConfig::default());
    waic_model(draws, &model, subset)
}

pub fn waic_model(
    draws: &PosteriorDraws,
    model: &WindowedModel,
    subset: &[usize],
) -> Result<WaicReport> {
    let positions = subset
        .iter()
        .map(|&i| {
            model.position(i).ok_or_else(|| {
                Error::Domain(format!("common-subset sample {i} is outside the window"))
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    let log_dens = draws
        .rows()
        .map(|r| model.pointwise_at(r, &positions))
        .collect::<Result<Vec<_>>>()?;
    waic_from_log_densities(&log_dens)
}

#[derive(Debug, Clone)]
pub struct DeltaFit {
    pub delta: f64,
    pub window: Window,
    pub draws: PosteriorDraws,
    pub summary: ThetaSummary,
    pub waic: WaicReport,
}

#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    /// One fit per grid entry, in the grid's descending order.
    pub fits: Vec<DeltaFit>,
    pub common_subset: Vec<usize>,
    pub selected: usize,
}

impl AdaptiveFit {
    pub fn selected_delta(&self) -> f64 {
        self.fits[self.selected].delta
    }

    pub fn selected_fit(&self) -> &DeltaFit {
        &self.fits[self.selected]
    }
}

/// Index of the smallest total; the earlier (larger Δ) entry wins ties.
pub fn select_min(totals: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in totals.iter().enumerate().skip(1) {
        if v < totals[best] {
            best = k;
        }
    }
    best
}

/// Fits every window of the grid and picks the smallest common-subset WAIC.
///
/// The chain for the `k`-th grid entry runs on RNG stream `cfg.stream + k`.
pub fn adaptive_fit(data: &Dataset, grid: &DeltaGrid, cfg: &ChainConfig) -> Result<AdaptiveFit> {
    cfg.validate()?;
    let subset = common_subset(data, grid)?;
    let scoring = WindowedModel::new(
        data,
        &Window::new(data, grid.smallest())?,
        LinkConfig::default(),
    );
    let windows = grid
        .deltas()
        .iter()
        .map(|&d| {
            let w = Window::new(data, d)?;
            w.check_fittable(data)?;
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    let fits = windows
        .into_par_iter()
        .enumerate()
        .map(|(k, w)| {
            let delta = w.delta();
            fit_window(
                data,
                w,
                &cfg.clone().with_stream(cfg.stream + k as u64),
                &scoring,
                &subset,
            )
            .map_err(|e| Error::Window {
                delta,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let totals: Vec<f64> = fits.iter().map(|f| f.waic.total).collect();
    let selected = select_min(&totals);
    Ok(AdaptiveFit {
        fits,
        common_subset: subset,
        selected,
    })
}

fn fit_window(
    data: &Dataset,
    w: Window,
    cfg: &ChainConfig,
    scoring: &WindowedModel,
    subset: &[usize],
) -> Result<DeltaFit> {
    let model = WindowedModel::new(data, &w, LinkConfig::default());
    let draws = run_chain_model(&model, cfg)?;
    let waic = waic_model(&draws, scoring, subset)?;
    Ok(DeltaFit {
        delta: w.delta(),
        summary: summarize(&draws),
        window: w,
        draws,
        waic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub block: String,
    pub name: String,
    pub estimate: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Named rows for the three coefficient blocks.
pub fn coefficient_entries(summary: &ThetaSummary, names: &[String]) -> Vec<CoefficientEntry> {
    let mut out = Vec::new();
    for (block, rows) in [
        ("gamma1", &summary.gamma1),
        ("gamma2", &summary.gamma2),
        ("alpha", &summary.alpha),
    ] {
        for (k, c) in rows.iter().enumerate() {
            out.push(CoefficientEntry {
                block: block.to_string(),
                name: names.get(k).cloned().unwrap_or_else(|| format!("x{k}")),
                estimate: c.estimate,
                lo95: c.lo95,
                hi95: c.hi95,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub delta: f64,
    pub n_window: usize,
    pub waic_fit: f64,
    pub waic_complexity: f64,
    pub waic_total: f64,
    pub coefficients: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub common_subset_size: usize,
    pub deltas: Vec<DeltaEntry>,
    pub selected_delta: f64,
}

impl SelectionReport {
    pub fn new(fit: &AdaptiveFit, names: &[String]) -> Self {
        Self {
            common_subset_size: fit.common_subset.len(),
            deltas: fit
                .fits
                .iter()
                .map(|f| DeltaEntry {
                    delta: f.delta,
                    n_window: f.window.len(),
                    waic_fit: f.waic.fit_term,
                    waic_complexity: f.waic.complexity_term,
                    waic_total: f.waic.total,
                    coefficients: coefficient_entries(&f.summary, names),
                })
                .collect(),
            selected_delta: fit.selected_delta(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn small(y: Vec<f64>) -> Dataset {
        let n = y.len();
        let raw = DMatrix::from_fn(n, 1, |i, _| i as f64);
        Dataset::from_raw(y, raw, 0.5).unwrap()
    }

    #[test]
    fn grid_rules() {
        let g = DeltaGrid::new(vec![0.1, 0.5, 0.25, 0.4]).unwrap();
        assert_eq!(g.deltas(), &[0.5, 0.4, 0.25, 0.1]);
        assert_eq!(g.smallest(), 0.1);
        assert_eq!(g, DeltaGrid::default());
        assert!(DeltaGrid::new(vec![]).is_err());
        assert!(DeltaGrid::new(vec![0.1, 0.1]).is_err());
        assert!(DeltaGrid::new(vec![-0.1]).is_err());
        assert!(DeltaGrid::new(vec![0.3])
            .unwrap()
            .validate_for(0.2)
            .is_err());
    }

    #[test]
    fn common_subset_examples() {
        let d = small(vec![0.45, 0.49, 0.55, 0.8]);
        assert_eq!(
            common_subset(&d, &DeltaGrid::default()).unwrap(),
            vec![0, 1, 2]
        );
        let all = common_subset(&d, &DeltaGrid::new(vec![0.5]).unwrap()).unwrap();
        assert_eq!(all, vec![0, 1, 2, 3]);
        let far = small(vec![0.1, 0.9, 0.95]);
        assert!(common_subset(&far, &DeltaGrid::default()).is_err());
    }

    #[test]
    fn waic_degenerate_cases() {
        let one = vec![vec![-0.3, 0.2]];
        let r = waic_from_log_densities(&one).unwrap();
        assert_eq!(r.complexity_term, 0.0);
        assert!((r.total - (-2.0 * (-0.3 + 0.2))).abs() < 1e-15);
        let same = vec![vec![0.5, -1.0]; 4];
        assert_eq!(waic_from_log_densities(&same).unwrap().complexity_term, 0.0);
        assert!(waic_from_log_densities(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn waic_three_draws_two_observations() {
        // log densities: draws x observations
        let ld = vec![vec![-1.0, 0.5], vec![-2.0, 0.7], vec![-1.5, 0.3]];
        // direct arithmetic:
        // obs 0: mean of exp = (e^-1 + e^-2 + e^-1.5)/3 = 0.2417952...; var = 0.25
        // obs 1: mean of exp = (e^.5 + e^.7 + e^.3)/3 = 1.7231657...; var = 0.04
        let lppd0 = ((-1f64).exp() + (-2f64).exp() + (-1.5f64).exp()) / 3.0;
        let lppd1 = (0.5f64.exp() + 0.7f64.exp() + 0.3f64.exp()) / 3.0;
        let fit = -2.0 * (lppd0.ln() + lppd1.ln());
        let complexity = 2.0 * (0.25 + 0.04);
        let r = waic_from_log_densities(&ld).unwrap();
        assert!((r.fit_term - fit).abs() < 1e-12);
        assert!((r.fit_term - 1.810_106_948_140_569).abs() < 1e-9);
        assert!((r.complexity_term - complexity).abs() < 1e-12);
        assert_eq!(r.total, r.fit_term + r.complexity_term);
        assert_eq!(r.subset_size, 2);
    }

    #[test]
    fn ties_prefer_larger_window() {
        assert_eq!(select_min(&[3.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(select_min(&[1.0, 1.0]), 0);
        assert_eq!(select_min(&[5.0]), 0);
    }

    fn fixture() -> Dataset {
        let n = 120;
        let y: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let raw = DMatrix::from_fn(n, 1, |i, _| ((i * 37) % 11) as f64 - 5.0);
        Dataset::from_raw(y, raw, 0.5).unwrap()
    }

    fn cfg() -> ChainConfig {
        ChainConfig {
            total_iters: 400,
            burn_in: 200,
            keep: 50,
            seed: 3,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn adaptive_fit_invariants() {
        let d = fixture();
        let grid = DeltaGrid::new(vec![0.5, 0.25, 0.15]).unwrap();
        let fit = adaptive_fit(&d, &grid, &cfg()).unwrap();
        assert_eq!(fit.fits.len(), 3);
        let s = Window::new(&d, 0.15).unwrap().indices().to_vec();
        assert_eq!(fit.common_subset, s);
        for f in &fit.fits {
            assert_eq!(f.waic.subset_size, s.len());
            assert!(f.waic.complexity_term >= 0.0);
            assert!(s.iter().all(|i| f.window.contains(*i)));
        }
        let min = fit
            .fits
            .iter()
            .map(|f| f.waic.total)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(fit.selected_fit().waic.total, min);

        // half-width 1/2 at t = 1/2 is the untrimmed model on the same stream
        let full = crate::sampler::run_chain(&d, &Window::full(&d), &cfg()).unwrap();
        assert_eq!(fit.fits[0].draws, full);

        // recomputing from dumped draws
        let f = &fit.fits[1];
        let mut buf = Vec::new();
        f.draws.write_csv(&mut buf).unwrap();
        let back = PosteriorDraws::read_csv(&buf[..], f.draws.config().clone()).unwrap();
        let smallest = Window::new(&d, 0.15).unwrap();
        let again = waic(&back, &d, &smallest, &fit.common_subset).unwrap();
        assert!((again.total - f.waic.total).abs() < 1e-10);
        let own = waic(&back, &d, &f.window, &fit.common_subset).unwrap();
        assert!(own.total > again.total);

        let report = SelectionReport::new(&fit, d.column_names());
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["selected_delta"].is_number());
        assert_eq!(json["deltas"].as_array().unwrap().len(), 3);
        assert_eq!(
            json["deltas"][0]["coefficients"].as_array().unwrap().len(),
            6
        );
    }

    #[test]
    fn single_entry_grid_selects_it() {
        let d = fixture();
        let fit = adaptive_fit(&d, &DeltaGrid::new(vec![0.3]).unwrap(), &cfg()).unwrap();
        assert_eq!(fit.selected_delta(), 0.3);
    }

    #[test]
    fn degenerate_window_reported_with_delta() {
        let d = fixture();
        let err = adaptive_fit(&d, &DeltaGrid::new(vec![0.5, 0.01]).unwrap(), &cfg()).unwrap_err();
        assert!(matches!(err, Error::DegenerateWindow { .. }));
    }

    proptest! {
        #[test]
        fn complexity_nonnegative(ld in proptest::collection::vec(
            proptest::collection::vec(-20.0f64..5.0, 4), 1..12)) {
            let r = waic_from_log_densities(&ld).unwrap();
            prop_assert!(r.complexity_term >= 0.0);
            prop_assert!((r.total - r.fit_term - r.complexity_term).abs() < 1e-12);
        }
    }
}
