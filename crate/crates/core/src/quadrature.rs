//! Adaptive quadrature helpers.
//!
//! Used by the generic discretizer, by `expected_cost`, and by tests that
//! cross-check closed-form values against direct integration.

use crate::error::{DpaError, Result};

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    (fa + 4.0 * fm + fb) * h / 6.0
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || (b - a).abs() < 1e-300 {
        return Ok(left + right + err / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(DpaError::NonIntegrable(format!(
            "adaptive Simpson hit depth {MAX_DEPTH} on [{a}, {b}] with error {err:e}"
        )));
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(DpaError::NonIntegrable("non-finite interval".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
        return Err(DpaError::NonIntegrable(
            "integrand evaluated to a non-finite value".into(),
        ));
    }
    let whole = simpson(fa, fm, fb, b - a);
    adaptive_step(&f, a, b, fa, fm, fb, whole, tol.max(1e-16), 0)
}

/// Integrates `f` over the whole real line by expanding symmetric windows
/// until the increment falls below `tol / 10`.
///
/// Suitable for densities and cost integrands that decay at infinity.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, scale: f64, tol: f64) -> Result<f64> {
    let scale = scale.abs().max(1.0);
    let mut radius = 8.0 * scale;
    let mut total = adaptive_simpson(&f, -radius, radius, tol)?;
    for _ in 0..40 {
        let next = 2.0 * radius;
        let left = adaptive_simpson(&f, -next, -radius, tol)?;
        let right = adaptive_simpson(&f, radius, next, tol)?;
        total += left + right;
        radius = next;
        if left.abs() + right.abs() < tol / 10.0 {
            return Ok(total);
        }
    }
    Err(DpaError::NonIntegrable(
        "window expansion did not converge".into(),
    ))
}

/// Fixed 5-point Gauss-Legendre rule on `[a, b]`.
///
/// Exact for polynomials of degree 9; used for per-cell masses where the
/// integrand is smooth and the cell is tiny.
pub fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    // Nodes/weights for [-1, 1].
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..5 {
        acc += W[i] * f(c + h * X[i]);
    }
    acc * h
}

/// Compensated (Neumaier) summation; keeps million-term mass sums accurate to
/// well below the 1e-12 invariants.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
