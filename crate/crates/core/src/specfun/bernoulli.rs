//! Bernoulli numbers (exact rationals) and Bernoulli polynomials.

use crate::error::{Error, Result};
use num_rational::Ratio;
use std::sync::OnceLock;

/// Largest index for which Bernoulli numbers and polynomials are tabulated.
pub const MAX_BERNOULLI_INDEX: usize = 30;

fn table() -> &'static [Ratio<i128>] {
    static TABLE: OnceLock<Vec<Ratio<i128>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // B_m = -1/(m+1) * sum_{k<m} C(m+1, k) B_k, with B_1 = -1/2.
        let mut b: Vec<Ratio<i128>> = Vec::with_capacity(MAX_BERNOULLI_INDEX + 1);
        b.push(Ratio::from_integer(1));
        for m in 1..=MAX_BERNOULLI_INDEX {
            let mut acc = Ratio::from_integer(0i128);
            let mut binom: i128 = 1;
            for (k, bk) in b.iter().enumerate() {
                acc += *bk * binom;
                binom = binom * (m as i128 + 1 - k as i128) / (k as i128 + 1);
            }
            b.push(-acc / (m as i128 + 1));
        }
        b
    })
}

/// The Bernoulli number `B_k` as an exact fraction (convention `B_1 = -1/2`).
pub fn bernoulli_number_exact(k: usize) -> Result<Ratio<i128>> {
    table()
        .get(k)
        .copied()
        .ok_or_else(|| Error::Unsupported(format!("Bernoulli index {k} exceeds {MAX_BERNOULLI_INDEX}")))
}

/// The Bernoulli number `B_k` as a float.
pub fn bernoulli_number(k: usize) -> Result<f64> {
    let r = bernoulli_number_exact(k)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

/// Bernoulli polynomial `B_k(x) = sum_j C(k, j) B_j x^{k-j}`.
pub fn bernoulli_poly(k: usize, x: f64) -> Result<f64> {
    if k > MAX_BERNOULLI_INDEX {
        return Err(Error::Unsupported(format!(
            "Bernoulli polynomial degree {k} exceeds {MAX_BERNOULLI_INDEX}"
        )));
    }
    // Horner in x over coefficients C(k, j) B_j for the power x^{k-j}.
    let mut acc = 0.0;
    let mut binom = 1.0f64;
    let mut coeffs = Vec::with_capacity(k + 1);
    for j in 0..=k {
        coeffs.push(binom * bernoulli_number(j)?);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    for c in coeffs.iter() {
        acc = acc * x + c;
    }
    Ok(acc)
}
