//! Riemann and Hurwitz zeta functions on the real line, and the two
//! zeta-valued moment families that appear in the stretched-exponential
//! expansions.

use super::bernoulli::bernoulli_number;
use super::gamma::{gamma, ln_gamma};
use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::OnceLock;

const BORWEIN_N: usize = 48;

fn borwein_weights() -> &'static [f64] {
    static W: OnceLock<Vec<f64>> = OnceLock::new();
    W.get_or_init(|| {
        // d_k = n * sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!), built from the
        // ratio of consecutive summands so no factorial is formed.
        let n = BORWEIN_N;
        let nf = n as f64;
        let mut d = Vec::with_capacity(n + 1);
        let mut term = 1.0;
        let mut acc = 1.0;
        d.push(acc);
        for i in 1..=n {
            let fi = i as f64;
            term *= 4.0 * (nf + fi - 1.0) * (nf - fi + 1.0) / ((2.0 * fi - 1.0) * (2.0 * fi));
            acc += term;
            d.push(acc);
        }
        d
    })
}

/// Dirichlet eta function `sum (-1)^{k-1} k^{-s}` for `s > 0`, accelerated by
/// Borwein's Chebyshev-weighted transform of the alternating series.
fn eta(s: f64) -> f64 {
    let d = borwein_weights();
    let dn = d[BORWEIN_N];
    let mut acc = 0.0;
    for k in 0..BORWEIN_N {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * (d[k] - dn) / ((k + 1) as f64).powf(s);
    }
    -acc / dn
}

/// Riemann zeta function for real `s != 1`.
///
/// Positive arguments use the alternating eta series, negative ones the
/// functional equation `ζ(s) = 2(2π)^{s-1} Γ(1-s) sin(πs/2) ζ(1-s)`.
pub fn zeta(s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("zeta argument must be finite, got {s}")));
    }
    if s == 1.0 {
        return Err(Error::Pole);
    }
    if s == 0.0 {
        return Ok(-0.5);
    }
    if s > 0.0 {
        if s > 60.0 {
            return Ok(1.0 + 2f64.powf(-s) + 3f64.powf(-s));
        }
        // 1 - 2^{1-s}, written to stay accurate near s = 1
        let denom = -((1.0 - s) * std::f64::consts::LN_2).exp_m1();
        return Ok(eta(s) / denom);
    }
    let t = 1.0 - s;
    let refl = 2.0 * (2.0 * PI).powf(s - 1.0) * gamma(t) * (PI * s / 2.0).sin();
    Ok(refl * zeta(t)?)
}

/// Scaled Hurwitz zeta `q^σ ζ(σ, q) = sum_{j>=0} (q/(q+j))^σ` for `σ > 1`,
/// `q > 0`, together with an error bound.
///
/// The scaling keeps the value near one when `q` is large, so powers of
/// tiny tail terms never underflow.
pub fn hurwitz_scaled(sigma: f64, q: f64) -> Result<(f64, f64)> {
    if !(sigma > 1.0) || !(q > 0.0) {
        return Err(Error::Domain(format!(
            "Hurwitz zeta needs sigma > 1 and q > 0, got ({sigma}, {q})"
        )));
    }
    const TERMS: usize = 10;
    let shift = (sigma + 20.0 - q).max(0.0).ceil() as usize;
    let mut direct = crate::numeric::CompensatedSum::new();
    for j in 0..shift {
        direct.add((-sigma * (j as f64 / q).ln_1p()).exp());
    }
    let big_q = q + shift as f64;
    let t = (-sigma * (shift as f64 / q).ln_1p()).exp();
    let mut tail = crate::numeric::CompensatedSum::new();
    tail.add(big_q / (sigma - 1.0));
    tail.add(0.5);
    // Rising factorial σ(σ+1)...(σ+2i-2) / Q^{2i-1} / (2i)!
    let mut rising = sigma / big_q;
    let mut fact = 2.0;
    let mut last = 0.0;
    for i in 1..=TERMS {
        let term = bernoulli_number(2 * i)? / fact * rising;
        tail.add(term);
        last = term;
        let a = sigma + (2 * i - 1) as f64;
        let b = sigma + (2 * i) as f64;
        rising *= a * b / (big_q * big_q);
        fact *= ((2 * i + 1) * (2 * i + 2)) as f64;
    }
    let value = direct.value() + t * tail.value();
    let err = t * last.abs() + 4.0 * f64::EPSILON * value.abs();
    Ok((value, err))
}

/// `n! (1 - 2^{-n}) ζ(n+1)` for `n >= 1`; equals `∫_0^∞ x^n/(1+e^x) dx`.
pub fn fermi_moment(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("fermi_moment needs n >= 1".into()));
    }
    let nf = n as f64;
    Ok(ln_gamma(nf + 1.0).exp() * (1.0 - 2f64.powf(-nf)) * zeta(nf + 1.0)?)
}

/// `n! (1 - 2^{-(n+1)}) ζ(n+2)` for `n >= 0`; equals `∫_0^∞ x^n log(1+e^{-x}) dx`.
pub fn fermi_log_moment(n: u32) -> Result<f64> {
    let nf = n as f64;
    Ok(ln_gamma(nf + 1.0).exp() * (1.0 - 2f64.powf(-(nf + 1.0))) * zeta(nf + 2.0)?)
}
