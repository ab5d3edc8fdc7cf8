//! Tanh-sinh (double exponential) quadrature.
//!
//! The integrand receives `(x, dist_to_lo, dist_to_hi)` where both distances are
//! computed without cancellation, which keeps endpoint singularities such as
//! `y^(a-1)` with `a < 1` accurate down to distances of ~1e-300.

use std::f64::consts::FRAC_PI_2;

const MAX_LEVEL: usize = 12;

/// Integrates `f` over `[lo, hi]`, refining until successive levels agree to `rel_tol`.
pub fn tanh_sinh<F>(f: F, lo: f64, hi: f64, rel_tol: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    assert!(hi > lo, "empty interval [{lo}, {hi}]");
    let half = 0.5 * (hi - lo);
    let width = hi - lo;

    let node = |t: f64| -> Option<f64> {
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        let comp = 2.0 * e / (1.0 + e);
        if comp == 0.0 {
            return None;
        }
        let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
        let w = half * FRAC_PI_2 * t.cosh() * sech2;
        let (x, dl, dr) = if u >= 0.0 {
            let dr = half * comp;
            (hi - dr, width - dr, dr)
        } else {
            let dl = half * comp;
            (lo + dl, dl, width - dl)
        };
        if dl <= 0.0 || dr <= 0.0 {
            return None;
        }
        Some(w * f(x, dl, dr))
    };

    // Sum over k*h for k in a symmetric range until nodes collapse onto the endpoints.
    let sweep = |h: f64, start: usize, stride: usize| -> f64 {
        let mut acc = 0.0;
        if start == 0 {
            acc += node(0.0).unwrap_or(0.0);
        }
        let mut k = if start == 0 { stride } else { start };
        loop {
            let t = k as f64 * h;
            let right = node(t);
            let left = node(-t);
            if right.is_none() && left.is_none() {
                break;
            }
            acc += right.unwrap_or(0.0) + left.unwrap_or(0.0);
            k += stride;
            if t > 8.0 {
                break;
            }
        }
        acc
    };

    let mut h = 0.5;
    let mut sum = sweep(h, 0, 1);
    let mut estimate = h * sum;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        sum += sweep(h, 1, 2);
        let next = h * sum;
        let converged = (next - estimate).abs() <= rel_tol * next.abs();
        estimate = next;
        if level >= 3 && converged {
            break;
        }
    }
    estimate
}

/// `∫_lo^hi y^(a-1) (1-y)^(b-1) dy` for `0 <= lo < hi <= 1`.
pub fn beta_kernel_integral(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    tanh_sinh(
        |_, dl, dr| {
            let y = lo + dl;
            let one_minus_y = (1.0 - hi) + dr;
            ((a - 1.0) * y.ln() + (b - 1.0) * one_minus_y.ln()).exp()
        },
        lo,
        hi,
        1e-14,
    )
}

/// Quadrature of `∫_{t1}^{t2} y^(a-1)(1-y)^(b-1) e^{-j·I(y<t)} dy`, split at `t`.
pub fn jump_kernel_integral(t: f64, j: f64, a: f64, b: f64, t1: f64, t2: f64) -> f64 {
    let left = if t > t1 {
        (-j).exp() * beta_kernel_integral(a, b, t1, t)
    } else {
        0.0
    };
    let right = if t2 > t {
        beta_kernel_integral(a, b, t, t2)
    } else {
        0.0
    };
    left + right
}

/// Regularized incomplete beta by quadrature: ratio of two kernel integrals.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    beta_kernel_integral(a, b, 0.0, x) / beta_kernel_integral(a, b, 0.0, 1.0)
}

/// Plain integration of a smooth function over `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    tanh_sinh(|x, _, _| f(x), lo, hi, 1e-13)
}
