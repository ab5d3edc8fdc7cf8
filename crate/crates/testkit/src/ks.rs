//! Kolmogorov–Smirnov distances.

/// Two-sample KS statistic `sup |F_a - F_b|`. Inputs need not be sorted.
pub fn two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS statistic against a continuous CDF.
pub fn one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_have_zero_distance() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(two_sample(&x, &x), 0.0);
    }

    #[test]
    fn disjoint_samples_have_unit_distance() {
        let x = [0.0, 1.0, 2.0];
        let y = [10.0, 11.0];
        assert_eq!(two_sample(&x, &y), 1.0);
    }

    #[test]
    fn uniform_grid_against_uniform_cdf() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = one_sample(&x, |v| v);
        assert!((d - 0.0005).abs() < 1e-12);
    }
}
