//! Direct-sum validators for the asymptotic series expansions used to derive
//! the explicit tail formulas.
//!
//! Each [`SeriesLemma`] pairs a series in a small parameter `a` with its
//! expansion as `a → 0+`. [`lemma_series`] evaluates both: the direct sum is
//! a finite partial sum plus a certified tail, never an asymptotic formula.

use super::bernoulli::bernoulli_poly;
use super::gamma::ln_upper_gamma;
use super::residual::{fractional_residual, fractional_residual_integral, geometric_log_constant};
use super::zeta::{fermi_log_moment, fermi_moment, hurwitz_scaled, zeta};
use crate::error::{Error, Result};
use crate::numeric::{binomial, logistic, softplus, BoundedValue, CompensatedSum};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// The series/expansion pairs. Power-law lemmas need `β > 1`, stretched ones
/// `β ∈ (0, 1)`, geometric ones `β = 1` and steep ones `β > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesLemma {
    /// `Σ 1/(1+(ak)^β)`.
    PowerReciprocal,
    /// `Σ (ak)^β/(1+(ak)^β)²`.
    PowerVariance,
    /// `Σ log(1 + (ak)^{-β})`.
    PowerLog,
    /// `Σ 1/(1 + a e^{k^β})`, `β < 1`.
    StretchedReciprocal,
    /// `Σ e^{k^β}/(1 + a e^{k^β})²`, `β < 1` (asymptotic equivalence).
    StretchedVariance,
    /// `Σ log(1 + 1/(a e^{k^β}))`, `β < 1`.
    StretchedLog,
    /// `Σ 1/(1 + a e^k)`.
    GeometricReciprocal,
    /// `Σ log(1 + 1/(a e^k))`.
    GeometricLog,
    /// `Σ 1/(1 + a e^{k^β})`, `β > 1`.
    SteepReciprocal,
    /// `Σ log(1 + 1/(a e^{k^β}))`, `β > 1`.
    SteepLog,
}

impl SeriesLemma {
    pub const ALL: [SeriesLemma; 10] = [
        SeriesLemma::PowerReciprocal,
        SeriesLemma::PowerVariance,
        SeriesLemma::PowerLog,
        SeriesLemma::StretchedReciprocal,
        SeriesLemma::StretchedVariance,
        SeriesLemma::StretchedLog,
        SeriesLemma::GeometricReciprocal,
        SeriesLemma::GeometricLog,
        SeriesLemma::SteepReciprocal,
        SeriesLemma::SteepLog,
    ];

    fn check_beta(self, beta: f64) -> Result<()> {
        use SeriesLemma::*;
        let ok = match self {
            PowerReciprocal | PowerVariance | PowerLog | SteepReciprocal | SteepLog => beta > 1.0,
            StretchedReciprocal | StretchedVariance | StretchedLog => beta > 0.0 && beta < 1.0,
            GeometricReciprocal | GeometricLog => beta == 1.0,
        };
        if ok && beta.is_finite() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{self:?} is not stated for beta = {beta}")))
        }
    }

    /// Whether the gap is measured relative to the expansion (asymptotic
    /// equivalence) rather than as an absolute difference.
    pub fn relative_gap(self) -> bool {
        matches!(self, SeriesLemma::StretchedVariance)
    }

    /// Ratio `bound(a/2) / bound(a)` of the stated error order; one for
    /// little-o statements.
    pub fn stated_ratio(self, beta: f64, a: f64) -> f64 {
        use SeriesLemma::*;
        let l = (1.0 / a).ln();
        let l2 = l + LN_2;
        match self {
            PowerReciprocal => 0.5,
            PowerVariance => 1.0,
            PowerLog => 0.5f64.powf((beta - 1.0).powi(2).min(1.0)),
            StretchedReciprocal => {
                let inv = 1.0 / beta;
                let frac = inv - inv.floor();
                let e = if frac == 0.0 { 1.0 - inv } else { (frac - 1.0).max(1.0 - inv) };
                (l2 / l).powf(e)
            }
            StretchedVariance | StretchedLog => 1.0,
            GeometricReciprocal | GeometricLog => 0.5,
            SteepReciprocal => {
                let e = 1.0 - 1.0 / beta;
                (-(beta / 2.0) * (l2.powf(e) - l.powf(e))).exp()
            }
            SteepLog => 1.0,
        }
    }
}

/// Direct sum and expansion of one lemma at one `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaSeriesResult {
    pub lemma: SeriesLemma,
    pub beta: f64,
    pub a: f64,
    pub direct: BoundedValue,
    pub expansion: f64,
    pub gap: f64,
}

/// `Σ_{k>=1} F(y_k)` with `y_k = (ak)^{-β}` and `F(y) = Σ_m coef(m) y^m`
/// near zero. Terms up to `K` with `y_{K+1} <= 1/2` are summed directly,
/// the rest through scaled Hurwitz zeta values.
fn power_sum<F, C>(beta: f64, a: f64, term: F, coef: C) -> Result<BoundedValue>
where
    F: Fn(f64) -> f64,
    C: Fn(usize) -> f64,
{
    const ORDERS: usize = 90;
    let k_cut = ((2f64.powf(1.0 / beta) / a).ceil() as usize).max(1);
    if k_cut > crate::numeric::max_terms() {
        return Err(Error::Truncation { terms: k_cut, best_bound: f64::INFINITY });
    }
    let mut acc = CompensatedSum::new();
    for k in 1..=k_cut {
        acc.add(term((a * k as f64).powf(-beta)));
    }
    let q = (k_cut + 1) as f64;
    let rho = (a * q).powf(-beta);
    let mut err = 0.0;
    let mut pow = 1.0;
    for m in 1..=ORDERS {
        pow *= rho;
        let (z, ze) = hurwitz_scaled(m as f64 * beta, q)?;
        let c = coef(m);
        acc.add(c * pow * z);
        err += (c * pow).abs() * ze;
    }
    // |coef(m)| <= m for all three expansions, and the scaled zeta values
    // are decreasing in m.
    let (z1, _) = hurwitz_scaled(beta, q)?;
    let m1 = (ORDERS + 1) as f64;
    err += z1 * m1 * rho.powf(m1) / (1.0 - rho).powi(2);
    Ok(BoundedValue::new(acc.value(), err + 1e-15 * acc.value().abs(), k_cut))
}

/// `Σ_{k>=1} g(k^β − L)` where `g(x) <= scale · e^{-x}` for large `x`.
fn steep_sum<G>(beta: f64, l: f64, scale: f64, g: G) -> Result<BoundedValue>
where
    G: Fn(f64) -> f64,
{
    let k_cut = ((l.max(0.0) + 40.0).powf(1.0 / beta).ceil() as usize).max(2);
    if k_cut > crate::numeric::max_terms() {
        return Err(Error::Truncation { terms: k_cut, best_bound: f64::INFINITY });
    }
    let mut acc = CompensatedSum::new();
    for k in 1..=k_cut {
        acc.add(g((k as f64).powf(beta) - l));
    }
    // Σ_{k>K} e^{L-k^β} <= e^L ∫_K^∞ e^{-x^β} dx = e^L Γ(1/β, K^β)/β
    let kf = k_cut as f64;
    let ln_tail = l + ln_upper_gamma(1.0 / beta, kf.powf(beta))? - beta.ln();
    let err = scale * ln_tail.exp() + 1e-15 * acc.value().abs();
    Ok(BoundedValue::new(acc.value(), err, k_cut))
}

fn alt(m: usize) -> f64 {
    if m % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Evaluate the direct sum and the expansion of `lemma` at `(β, a)`.
pub fn lemma_series(lemma: SeriesLemma, beta: f64, a: f64) -> Result<LemmaSeriesResult> {
    use SeriesLemma::*;
    lemma.check_beta(beta)?;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("small parameter must lie in (0, 1), got {a}")));
    }
    let l = (1.0 / a).ln();
    let (direct, expansion) = match lemma {
        PowerReciprocal => {
            let d = power_sum(beta, a, |y| y / (1.0 + y), alt)?;
            let e = PI / (beta * a * (PI / beta).sin()) - 0.5;
            (d, e)
        }
        PowerVariance => {
            let d = power_sum(beta, a, |y| y / (1.0 + y).powi(2), |m| alt(m) * m as f64)?;
            let e = PI / (beta * beta * a * (PI / beta).sin());
            (d, e)
        }
        PowerLog => {
            let d = power_sum(beta, a, f64::ln_1p, |m| alt(m) / m as f64)?;
            let e = PI / (a * (PI / beta).sin()) - beta / 2.0 * l - beta / 2.0 * (2.0 * PI).ln();
            (d, e)
        }
        StretchedReciprocal => {
            let d = steep_sum(beta, l, 1.0, |x| logistic(-x))?;
            let inv = 1.0 / beta;
            let mut e = CompensatedSum::new();
            e.add(l.powf(inv));
            let top = inv.floor() as i64 - 1;
            let mut n = 1;
            while n as i64 <= top {
                e.add(2.0 / beta * binomial(inv - 1.0, n) * fermi_moment(n as u32)? * l.powf(inv - 1.0 - n as f64));
                n += 2;
            }
            e.add(-0.5);
            (d, e.value())
        }
        StretchedVariance => {
            let d = steep_sum(beta, l, 1.0 / a, |x| logistic(x) * logistic(-x) / a)?;
            let e = l.powf(1.0 / beta - 1.0) / (beta * a);
            (d, e)
        }
        StretchedLog => {
            let d = steep_sum(beta, l, 1.0, |x| softplus(-x))?;
            let inv = 1.0 / beta;
            let mut e = CompensatedSum::new();
            e.add(beta / (1.0 + beta) * l.powf(1.0 + inv));
            let top = inv.floor() as i64 - 1;
            let mut n = 0;
            while n as i64 <= top {
                e.add(2.0 / beta * binomial(inv - 1.0, n) * fermi_log_moment(n as u32)? * l.powf(inv - 1.0 - n as f64));
                n += 2;
            }
            e.add(-0.5 * l);
            e.add(-zeta(-beta)?);
            (d, e.value())
        }
        GeometricReciprocal => {
            let d = steep_sum(1.0, l, 1.0, |x| logistic(-x))?;
            let frac = l - l.floor();
            (d, l - 0.5 + fractional_residual(frac)?)
        }
        GeometricLog => {
            let d = steep_sum(1.0, l, 1.0, |x| softplus(-x))?;
            let frac = l - l.floor();
            let e = l * l / 2.0 - l / 2.0 + geometric_log_constant() + fractional_residual_integral(frac)?;
            (d, e)
        }
        SteepReciprocal => {
            let d = steep_sum(beta, l, 1.0, |x| logistic(-x))?;
            let ca = l.powf(1.0 / beta).floor();
            let e = ca - 1.0 + logistic(l - ca.powf(beta)) + logistic(l - (ca + 1.0).powf(beta));
            (d, e)
        }
        SteepLog => {
            let d = steep_sum(beta, l, 1.0, |x| softplus(-x))?;
            let root = l.powf(1.0 / beta);
            let ca = root.floor();
            let frac = root - ca;
            let mut e = CompensatedSum::new();
            e.add(softplus(l - (ca + 1.0).powf(beta)));
            e.add(softplus(ca.powf(beta) - l));
            e.add(ca * l);
            e.add(-l.powf(1.0 + 1.0 / beta) / (beta + 1.0));
            e.add(-zeta(-beta)?);
            let top = 1 + beta.floor() as usize;
            for k in 1..=top {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let t = sign * binomial(beta + 1.0, k) * bernoulli_poly(k, frac)?
                    * l.powf(1.0 - (k as f64 - 1.0) / beta);
                e.add(-t / (beta + 1.0));
            }
            (d, e.value())
        }
    };
    let gap = if lemma.relative_gap() {
        (direct.value / expansion - 1.0).abs()
    } else {
        (direct.value - expansion).abs()
    };
    Ok(LemmaSeriesResult { lemma, beta, a, direct, expansion, gap })
}

/// `log(a sinh(π/a)/π)`, the closed form of `Σ log(1 + (ak)^{-2})`.
pub fn sinh_product_log(a: f64) -> f64 {
    let x = PI / a;
    (a / PI).ln() + x + (-(-2.0 * x).exp()).ln_1p() - LN_2
}
