//! Recursive Cox–de Boor evaluation and Bernstein closed forms.

/// Value of the `i`-th B-spline of degree `k` over the full knot vector `t` at `x`,
/// by the textbook recursion. The last basis function is closed at the right end.
pub fn de_boor(i: usize, k: usize, t: &[f64], x: f64) -> f64 {
    if k == 0 {
        let right_end = x == *t.last().unwrap();
        if right_end {
            // Only the last non-degenerate interval owns the right endpoint.
            let last = (0..t.len() - 1).rev().find(|&m| t[m] < t[m + 1]).unwrap();
            return if i == last { 1.0 } else { 0.0 };
        }
        return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = t[i + k] - t[i];
    if d1 > 0.0 {
        v += (x - t[i]) / d1 * de_boor(i, k - 1, t, x);
    }
    let d2 = t[i + k + 1] - t[i + 1];
    if d2 > 0.0 {
        v += (t[i + k + 1] - x) / d2 * de_boor(i + 1, k - 1, t, x);
    }
    v
}

/// Cubic Bernstein polynomials on `[lo, hi]`: the B-spline basis with no interior knots.
pub fn bernstein3(lo: f64, hi: f64, x: f64) -> [f64; 4] {
    let u = (x - lo) / (hi - lo);
    let v = 1.0 - u;
    [v * v * v, 3.0 * u * v * v, 3.0 * u * u * v, u * u * u]
}
