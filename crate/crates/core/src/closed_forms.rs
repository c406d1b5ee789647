//! Fully explicit asymptotics of `log P{Y = n}` for the polynomial and
//! stretched-exponential families.
//!
//! Each evaluator returns its summands by name so they can be inspected or
//! plotted; `log_value` is their compensated sum taken in descending
//! magnitude.

use crate::error::{Error, Result};
use crate::numeric::{binomial, CompensatedSum};
use crate::regime::{c0, ThetaLimits};
use crate::saddle::{guarded_floor, stretched_saddle_coefficients};
use crate::sequences::Family;
use crate::specfun::{
    bernoulli_poly, fermi_log_moment, fractional_residual_integral, geometric_log_constant, zeta,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which explicit formula produced an [`ExplicitAsymptotic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedFormCase {
    /// `r_k = c k^{−β}`, `β > 1`.
    Polynomial,
    /// `r_k = c e^{−k^β}`, `0 < β < 1`.
    StretchedSublinear,
    /// `r_k = c e^{−k}`.
    StretchedUnit,
    /// `r_k = c e^{−k^β}`, `β > 1`.
    StretchedSuperlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitAsymptotic {
    pub case: ClosedFormCase,
    pub c: f64,
    pub beta: f64,
    pub n: f64,
    pub terms: Vec<(String, f64)>,
    pub log_value: f64,
}

impl ExplicitAsymptotic {
    fn assemble(case: ClosedFormCase, c: f64, beta: f64, n: f64, terms: Vec<(String, f64)>) -> Self {
        let mut values: Vec<f64> = terms.iter().map(|t| t.1).collect();
        values.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        let log_value = values.into_iter().collect::<CompensatedSum>().value();
        ExplicitAsymptotic { case, c, beta, n, terms, log_value }
    }

    /// Value of the named summand.
    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.0 == name).map(|t| t.1)
    }
}

fn check(c: f64, n: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive and finite, got {c}")));
    }
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::Domain(format!("level must be at least 1, got {n}")));
    }
    Ok(())
}

fn named(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

/// Polynomial family `r_k = c k^{−β}`, `β > 1`.
pub fn polynomial(c: f64, beta: f64, n: f64) -> Result<ExplicitAsymptotic> {
    check(c, n)?;
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("polynomial form needs beta > 1, got {beta}")));
    }
    let sine = (PI / beta).sin();
    let ln_n = n.ln();
    let inner = (beta * sine / (PI * c.powf(1.0 / beta))).ln();
    let terms = named(&[
        ("n_log_n", -beta * n * ln_n),
        ("linear", -beta * (inner - 1.0) * n),
        ("log_n", -0.5 * (beta + 1.0) * ln_n),
        ("constant", -0.5 * beta * (2.0 * beta * sine).ln() - 0.5 * (2.0 * PI).ln() + 0.5 * beta.ln()),
    ]);
    Ok(ExplicitAsymptotic::assemble(ClosedFormCase::Polynomial, c, beta, n, terms))
}

/// Stretched exponential `r_k = c e^{−k^β}` with `0 < β < 1`, including the
/// saddle correction `α(n) = Σ_{i<ℓ} A_i n^{−2iβ}` with `ℓ = ⌊(1+β)/(2β)⌋`.
pub fn stretched_sublinear(c: f64, beta: f64, n: f64) -> Result<ExplicitAsymptotic> {
    check(c, n)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("sublinear form needs 0 < beta < 1, got {beta}")));
    }
    let p = 1.0 / beta;
    let ell = guarded_floor((1.0 + beta) / (2.0 * beta));
    let coeffs = stretched_saddle_coefficients(beta)?;
    let x = n.powf(-2.0 * beta);
    let alpha: f64 = coeffs.iter().enumerate().map(|(i, a)| a * x.powi(i as i32 + 1)).sum();

    let mut terms = named(&[
        ("prefactor", 0.5 * (beta / (2.0 * PI * n.powf(1.0 - beta))).ln()),
        ("leading", -n.powf(1.0 + beta) / (1.0 + beta)),
    ]);
    let mut correction = CompensatedSum::new();
    for i in 2..=ell {
        correction.add(binomial(1.0 + p, i) * alpha.powi(i as i32));
    }
    terms.push(("saddle_correction".into(), beta * n.powf(1.0 + beta) / (1.0 + beta) * correction.value()));
    terms.push(("scale".into(), n * c.ln()));
    terms.push(("half_power".into(), -0.5 * n.powf(beta)));

    let jmax = guarded_floor(p).saturating_sub(1);
    let mut j = 0;
    while j <= jmax {
        let upper = ell as i64 - (j / 2) as i64 - 1;
        let mut inner = CompensatedSum::new();
        for i in 0..=upper.max(-1) {
            inner.add(binomial(p - 1.0 - j as f64, i as usize) * alpha.powi(i as i32));
        }
        let value =
            2.0 * p * binomial(p - 1.0, j) * fermi_log_moment(j as u32)? * n.powf(1.0 - beta * (1.0 + j as f64)) * inner.value();
        terms.push((format!("even_{j}"), value));
        j += 2;
    }
    terms.push(("zeta".into(), -zeta(-beta)?));
    Ok(ExplicitAsymptotic::assemble(ClosedFormCase::StretchedSublinear, c, beta, n, terms))
}

/// The four-term form of [`stretched_sublinear`] valid for `β ∈ (1/3, 1)`,
/// with the extra `n^{1−3β}` term when `β ∈ (1/4, 1/3]`.
pub fn stretched_sublinear_reduced(c: f64, beta: f64, n: f64) -> Result<ExplicitAsymptotic> {
    check(c, n)?;
    if !(beta > 0.25 && beta < 1.0) {
        return Err(Error::Domain(format!("reduced sublinear form needs 1/4 < beta < 1, got {beta}")));
    }
    let p = 1.0 / beta;
    let f0 = PI * PI / 12.0;
    let mut terms = named(&[
        ("prefactor", 0.5 * (beta / (2.0 * PI * n.powf(1.0 - beta))).ln()),
        ("leading", -n.powf(1.0 + beta) / (1.0 + beta)),
        ("scale", n * c.ln()),
        ("half_power", -0.5 * n.powf(beta)),
        ("even_0", 2.0 * p * f0 * n.powf(1.0 - beta)),
        ("zeta", -zeta(-beta)?),
    ]);
    if beta <= 1.0 / 3.0 {
        // the first Fermi moment coincides with f₀
        let c1 = f0;
        let f2 = 7.0 * PI.powi(4) / 360.0;
        let coef = p * (p - 1.0) * (2.0 * (p - 1.0) * c1 * c1 - 4.0 * (p - 1.0) * c1 * f0 + (p - 2.0) * f2);
        terms.push(("cubic".into(), coef * n.powf(1.0 - 3.0 * beta)));
    }
    Ok(ExplicitAsymptotic::assemble(ClosedFormCase::StretchedSublinear, c, beta, n, terms))
}

/// The regime-C constant `c₀` of the geometric family `r_k = c e^{−k}`,
/// whose limit laws have `p_k = e^{−k+1/2}` and `q_k = e^{−k−1/2}`.
pub fn geometric_c0() -> Result<f64> {
    let limits = ThetaLimits::Geometric { p1: (-0.5f64).exp(), q0: (-0.5f64).exp(), ratio: (-1.0f64).exp() };
    Ok(c0(&limits, 1e-16)?.value)
}

/// Geometric family `r_k = c e^{−k}`.
pub fn stretched_unit(c: f64, n: f64) -> Result<ExplicitAsymptotic> {
    check(c, n)?;
    let terms = named(&[
        ("log_c0", geometric_c0()?.ln()),
        ("leading", -0.5 * n * n),
        ("linear", (c.ln() - 0.5) * n),
        ("constant", -0.125 + geometric_log_constant()),
        ("residual", fractional_residual_integral(0.5)?),
    ]);
    Ok(ExplicitAsymptotic::assemble(ClosedFormCase::StretchedUnit, c, 1.0, n, terms))
}

/// Stretched exponential `r_k = c e^{−k^β}` with `β > 1`.
pub fn stretched_superlinear(c: f64, beta: f64, n: f64) -> Result<ExplicitAsymptotic> {
    check(c, n)?;
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("superlinear form needs beta > 1, got {beta}")));
    }
    let lc = c.ln();
    let arg = n.powf(-(beta - 1.0) / 2.0) / beta + lc / beta * n.powf(1.0 - beta)
        - (beta - 1.0) / (2.0 * beta * beta) * n.powf(-beta);
    let gate = guarded_floor((beta + 1.0) / 2.0);
    let mut terms = named(&[
        ("leading", -n.powf(beta + 1.0) / (beta + 1.0)),
        ("half_power", -n.powf((beta + 1.0) / 2.0) / beta),
        ("linear", lc * (1.0 - 1.0 / beta) * n),
        ("constant", -0.5 / (beta * beta)),
    ]);
    for k in 1..=guarded_floor(beta) + 1 {
        let kf = k as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut powers = n.powf(beta - (kf - 1.0));
        if k <= gate {
            powers += (1.0 - (kf - 1.0) / beta) * n.powf((beta + 1.0) / 2.0 - kf);
        }
        let value = -sign * binomial(beta + 1.0, k) * bernoulli_poly(k, arg)? * powers / (beta + 1.0);
        terms.push((format!("bernoulli_{k}"), value));
    }
    Ok(ExplicitAsymptotic::assemble(ClosedFormCase::StretchedSuperlinear, c, beta, n, terms))
}

/// The reduced form of [`stretched_superlinear`] for `β ∈ (1, 2)`.
pub fn stretched_superlinear_reduced(c: f64, beta: f64, n: f64) -> Result<ExplicitAsymptotic> {
    check(c, n)?;
    if !(beta > 1.0 && beta < 2.0) {
        return Err(Error::Domain(format!("reduced superlinear form needs 1 < beta < 2, got {beta}")));
    }
    let terms = named(&[
        ("leading", -n.powf(beta + 1.0) / (beta + 1.0)),
        ("half_power", -0.5 * n.powf(beta)),
        ("linear", c.ln() * n),
        ("bernoulli_2", -beta / 12.0 * n.powf(beta - 1.0)),
        ("constant", 0.5 * c.ln()),
    ]);
    Ok(ExplicitAsymptotic::assemble(ClosedFormCase::StretchedSuperlinear, c, beta, n, terms))
}

/// The explicit formula matching a family descriptor, if there is one.
pub fn for_family(family: &Family, n: f64) -> Result<ExplicitAsymptotic> {
    match *family {
        Family::Polynomial { c, beta } => polynomial(c, beta, n),
        Family::StretchedExp { c, beta } if beta < 1.0 => stretched_sublinear(c, beta, n),
        Family::StretchedExp { c, beta } if beta == 1.0 => stretched_unit(c, n),
        Family::StretchedExp { c, beta } => stretched_superlinear(c, beta, n),
        _ => Err(Error::UnsupportedFamily("no explicit asymptotic for this family".into())),
    }
}
