//! Adaptive Simpson quadrature on finite and semi-infinite intervals.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

fn simpson_step<F: Fn(f64) -> f64>(
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
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Convergence(format!(
            "adaptive Simpson exhausted depth on [{a}, {b}]"
        )));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

/// `∫_a^b f(x) dx` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    // Pre-split into a few panels so narrow features are not skipped.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut total = crate::numeric::CompensatedSum::new();
    for i in 0..PANELS {
        let lo = a + h * i as f64;
        let hi = if i + 1 == PANELS { b } else { lo + h };
        let fa = f(lo);
        let fb = f(hi);
        let fm = f(0.5 * (lo + hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total.add(simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, MAX_DEPTH)?);
    }
    Ok(total.value())
}

/// `∫_a^∞ f(x) dx`, integrated over doubling panels `[a, a+w], [a+w, a+3w], …`
/// until `tail_bound(x)`, a caller-supplied bound on `∫_x^∞ |f|`, drops
/// below `tol / 2`.
pub fn integrate_to_infinity<F, T>(f: F, a: f64, width: f64, tol: f64, tail_bound: T) -> Result<f64>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let mut total = crate::numeric::CompensatedSum::new();
    let mut lo = a;
    let mut w = width;
    for _ in 0..200 {
        if tail_bound(lo) <= tol / 2.0 {
            return Ok(total.value());
        }
        let hi = lo + w;
        total.add(integrate(&f, lo, hi, tol / 4.0)?);
        lo = hi;
        w *= 2.0;
    }
    Err(Error::Convergence("semi-infinite integral did not reach its tail bound".into()))
}
