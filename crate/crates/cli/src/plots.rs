//! Plot-ready CSVs of the fitted jump surface `j(x) = (x'α)₊` on the
//! standardized covariate scale.

use std::io::Write;

use ddreg_core::sampler::{quantile_sorted, PosteriorDraws};
use ddreg_core::{Error, Result};

pub const GRID_POINTS: usize = 41;
pub const GRID_HALF_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePoint {
    pub covariate: String,
    pub value: f64,
    pub jump: f64,
    pub lo95: f64,
    pub hi95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourPoint {
    pub u: f64,
    pub v: f64,
    pub jump: f64,
    /// Inside the region where the fitted jump is exactly zero.
    pub zero: bool,
}

pub fn grid() -> Vec<f64> {
    let step = 2.0 * GRID_HALF_WIDTH / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS)
        .map(|k| -GRID_HALF_WIDTH + k as f64 * step)
        .collect()
}

fn jump_at(alpha: &[f64], x: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(x)
        .map(|(a, v)| a * v)
        .sum::<f64>()
        .max(0.0)
}

/// One covariate at a time over the grid, the rest held at their mean (zero);
/// band from the α draws.
pub fn jump_profiles(
    alpha_hat: &[f64],
    draws: Option<&PosteriorDraws>,
    names: &[String],
) -> Result<Vec<ProfilePoint>> {
    let p = alpha_hat.len();
    if names.len() != p {
        return Err(Error::Dimension {
            what: "covariate names",
            expected: p,
            got: names.len(),
        });
    }
    let alpha_draws: Vec<&[f64]> = match draws {
        Some(d) => d.rows().map(|r| &r[2 * p..]).collect(),
        None => Vec::new(),
    };
    let mut out = Vec::with_capacity((p - 1) * GRID_POINTS);
    let mut x = vec![0.0; p];
    x[0] = 1.0;
    let mut js = Vec::with_capacity(alpha_draws.len());
    for k in 1..p {
        for z in grid() {
            x[k] = z;
            let jump = jump_at(alpha_hat, &x);
            let (lo95, hi95) = if alpha_draws.is_empty() {
                (jump, jump)
            } else {
                js.clear();
                js.extend(alpha_draws.iter().map(|a| jump_at(a, &x)));
                js.sort_by(f64::total_cmp);
                (quantile_sorted(&js, 0.025), quantile_sorted(&js, 0.975))
            };
            out.push(ProfilePoint {
                covariate: names[k].clone(),
                value: z,
                jump,
                lo95,
                hi95,
            });
        }
        x[k] = 0.0;
    }
    Ok(out)
}

/// Two covariates (design column indices `a`, `b`) over the square grid.
pub fn jump_contour(alpha_hat: &[f64], a: usize, b: usize) -> Result<Vec<ContourPoint>> {
    let p = alpha_hat.len();
    if a == 0 || b == 0 || a >= p || b >= p || a == b {
        return Err(Error::Config(format!(
            "contour needs two distinct non-intercept columns in 1..{p}, got {a} and {b}"
        )));
    }
    let mut x = vec![0.0; p];
    x[0] = 1.0;
    let g = grid();
    let mut out = Vec::with_capacity(g.len() * g.len());
    for &u in &g {
        for &v in &g {
            x[a] = u;
            x[b] = v;
            let jump = jump_at(alpha_hat, &x);
            out.push(ContourPoint {
                u,
                v,
                jump,
                zero: jump == 0.0,
            });
        }
    }
    Ok(out)
}

pub fn write_profiles<W: Write>(points: &[ProfilePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["covariate", "value", "jump", "lo95", "hi95"])
        .map_err(csv_err)?;
    for p in points {
        w.write_record([
            p.covariate.clone(),
            p.value.to_string(),
            p.jump.to_string(),
            p.lo95.to_string(),
            p.hi95.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_contour<W: Write>(points: &[ContourPoint], names: (&str, &str), out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([names.0, names.1, "jump", "zero_jump"])
        .map_err(csv_err)?;
    for p in points {
        w.write_record([
            p.u.to_string(),
            p.v.to_string(),
            p.jump.to_string(),
            u8::from(p.zero).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_minus_two_to_two() {
        let g = grid();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[20], 0.0);
        assert!((g[40] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn intercept_only_contour_is_flat() {
        let alpha = [1.0, 0.0, 0.0, 0.0];
        let c = jump_contour(&alpha, 1, 2).unwrap();
        assert_eq!(c.len(), 41 * 41);
        assert!(c.iter().all(|p| p.jump == 1.0 && !p.zero));
    }

    #[test]
    fn contour_masks_zero_region() {
        let alpha = [0.0, 1.0, 0.0];
        let c = jump_contour(&alpha, 1, 2).unwrap();
        for p in &c {
            assert_eq!(p.zero, p.u <= 0.0);
            assert_eq!(p.jump, p.u.max(0.0));
        }
    }

    #[test]
    fn profiles_without_draws() {
        let names: Vec<String> = ["intercept", "a", "b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let pr = jump_profiles(&[0.5, 1.0, -0.25], None, &names).unwrap();
        assert_eq!(pr.len(), 2 * 41);
        let last_a = &pr[40];
        assert_eq!(last_a.covariate, "a");
        assert!((last_a.jump - 2.5).abs() < 1e-15);
        let first_b = &pr[41];
        assert!((first_b.jump - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_contour_columns() {
        assert!(jump_contour(&[1.0, 1.0], 0, 1).is_err());
        assert!(jump_contour(&[1.0, 1.0, 1.0], 1, 1).is_err());
    }
}
