//! The small periodic residual that appears when sums over `k` of
//! `1/(1 + e^{k-b})` are compared with their integral, its primitive, and
//! the constant `log 2 + 2 Σ log(1 + e^{-m})`.

use super::quad::integrate;
use crate::error::{Error, Result};
use crate::numeric::{logistic, softplus, CompensatedSum};

/// Number of terms per geometric series; the neglected tail is below `1e-18`.
const TERMS: usize = 45;

fn check_unit(b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!("argument must lie in [0, 1], got {b}")));
    }
    Ok(())
}

/// `h(b) = Σ_{k>=0} 1/(1+e^{k-b}) − Σ_{k>=1} 1/(1+e^{k+b}) − b − 1/2` on `[0, 1]`.
pub fn fractional_residual(b: f64) -> Result<f64> {
    check_unit(b)?;
    let mut acc = CompensatedSum::new();
    for k in 0..TERMS {
        acc.add(logistic(b - k as f64));
    }
    for k in 1..TERMS {
        acc.add(-logistic(-(k as f64) - b));
    }
    acc.add(-b);
    acc.add(-0.5);
    Ok(acc.value())
}

/// Rigorous bound on the series truncation inside [`fractional_residual`].
pub fn fractional_residual_truncation() -> f64 {
    2.0 * (1.0 - TERMS as f64).exp() / (1.0 - (-1.0f64).exp())
}

/// `h₂(b) = ∫_0^b h(x) dx`, by adaptive Simpson quadrature.
pub fn fractional_residual_integral(b: f64) -> Result<f64> {
    check_unit(b)?;
    integrate(|x| fractional_residual(x).unwrap_or(f64::NAN), 0.0, b, 1e-15)
}

/// Closed-form series for `h₂(b)` obtained by integrating `h` term by term:
/// `Σ_{k>=0} [sp(b−k) − sp(−k)] + Σ_{k>=1} [sp(−k−b) − sp(−k)] − b²/2 − b/2`
/// with `sp(z) = log(1 + e^z)`. Used as an independent check on the quadrature.
pub fn fractional_residual_integral_series(b: f64) -> Result<f64> {
    check_unit(b)?;
    let mut acc = CompensatedSum::new();
    for k in 0..TERMS {
        let kf = k as f64;
        acc.add(softplus(b - kf) - softplus(-kf));
    }
    for k in 1..TERMS {
        let kf = k as f64;
        acc.add(softplus(-kf - b) - softplus(-kf));
    }
    acc.add(-0.5 * b * b);
    acc.add(-0.5 * b);
    Ok(acc.value())
}

/// `log 2 + 2 Σ_{m>=1} log(1 + e^{-m})`.
pub fn geometric_log_constant() -> f64 {
    let mut acc = CompensatedSum::new();
    acc.add(std::f64::consts::LN_2);
    for m in 1..60 {
        acc.add(2.0 * (-(m as f64)).exp().ln_1p());
    }
    acc.value()
}
