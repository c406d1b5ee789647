//! The saddle point `s_n`, the unique root of `ψ'(s) = n`.

use crate::cgf::{log_tail_series, tail_series, tail_series_scaled, SeriesKind};
use crate::error::{Error, Result};
use crate::numeric::{binomial, log_add_exp, softplus};
use crate::sequences::{Family, SequenceDescriptor};
use crate::specfun::fermi_moment;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const MAX_ITER: usize = 300;
/// Floor for relative accuracy of the residual sums.
const RELATIVE_FLOOR: f64 = 1e-280;
const MAX_BRACKET_DOUBLINGS: usize = 64;

/// How a [`SaddleSolution`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaddleMethod {
    Numeric,
    FamilyFormula,
}

/// The tilt `s` for level `n` together with `ψ` and its derivatives there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub n: u64,
    pub s: f64,
    pub psi: f64,
    pub psi_prime: f64,
    pub psi_double_prime: f64,
    /// `log ψ''(s)`, finite even where `ψ''(s)` underflows.
    pub ln_psi_double_prime: f64,
    /// `ψ'(s) − n`.
    pub residual: f64,
    pub method: SaddleMethod,
}

/// Default residual tolerance `1e-9 · max(1, n)`.
pub fn default_residual_tol(n: u64) -> f64 {
    1e-9 * (n as f64).max(1.0)
}

/// Smallest admissible level `⌊ψ'(0)⌋ + 1`.
pub fn min_level(seq: &SequenceDescriptor) -> Result<u64> {
    let total = tail_series(seq, 0.0, 1e-12, 0, &[SeriesKind::Raw])?[0];
    Ok((total.value + total.error_bound).floor() as u64 + 1)
}

fn check_level(seq: &SequenceDescriptor, n: u64) -> Result<()> {
    if let Some(m) = seq.support() {
        if n >= m as u64 {
            return Err(Error::NoSolution { n, support: m });
        }
    }
    let min = min_level(seq)?;
    if n < min {
        return Err(Error::LevelTooSmall { n, min });
    }
    Ok(())
}

fn solution_at(seq: &SequenceDescriptor, n: u64, s: f64, tol: f64, method: SaddleMethod) -> Result<SaddleSolution> {
    let psi = tail_series(seq, s, tol, 0, &[SeriesKind::Psi])?[0].value;
    let b = balance(seq, s, n, tol)?;
    let residual = b.residual();
    Ok(SaddleSolution {
        n,
        s,
        psi,
        psi_prime: n as f64 + residual,
        psi_double_prime: b.ln_variance().exp(),
        ln_psi_double_prime: b.ln_variance(),
        residual,
        method,
    })
}

/// Head and tail pieces of `ψ'(s) − n` and `ψ''(s)` split at `n`, as logarithms.
struct Balance {
    /// `log Σ_{k<=n} (1 − π_k)`.
    ln_head: f64,
    ln_head_var: f64,
    /// `log Σ_{k>n} π_k`.
    ln_tail: f64,
    ln_tail_var: f64,
}

impl Balance {
    /// `ψ'(s) − n`, formed as `tail − head` so that it keeps full relative
    /// precision even when `ψ'(s)` sits within a few ulps of `n` over a wide
    /// range of `s`.
    fn residual(&self) -> f64 {
        self.ln_tail.exp() - self.ln_head.exp()
    }

    /// Sign of the residual, valid even when both pieces underflow.
    fn above(&self) -> bool {
        self.ln_tail > self.ln_head
    }

    fn ln_variance(&self) -> f64 {
        log_add_exp(self.ln_head_var, self.ln_tail_var)
    }

    /// Newton target `log(tail/head)` and its slope; nearly linear in `s`
    /// when `ψ''` is tiny, where the plain residual is exponentially flat.
    fn log_ratio(&self) -> Option<(f64, f64)> {
        (self.ln_head.is_finite() && self.ln_tail.is_finite()).then(|| {
            let slope = (self.ln_tail_var - self.ln_tail).exp() + (self.ln_head_var - self.ln_head).exp();
            (self.ln_tail - self.ln_head, slope)
        })
    }
}

/// Below this the linear tail sums are recomputed in the log domain.
const UNDERFLOW_GUARD: f64 = 1e-250;

fn balance(seq: &SequenceDescriptor, s: f64, n: u64, tol: f64) -> Result<Balance> {
    let nn = n as usize;
    let mut ln_head = f64::NEG_INFINITY;
    let mut ln_head_var = f64::NEG_INFINITY;
    for k in 1..=nn {
        let z = seq.terms(k)?.logit() + s;
        if z == f64::INFINITY {
            continue;
        }
        ln_head = log_add_exp(ln_head, -softplus(z));
        ln_head_var = log_add_exp(ln_head_var, -softplus(z) - softplus(-z));
    }
    let kinds = [SeriesKind::TiltedMean, SeriesKind::TiltedVariance];
    let tail = tail_series_scaled(seq, s, tol, RELATIVE_FLOOR, nn, &kinds)?;
    let (ln_tail, ln_tail_var) = if tail[1].value < UNDERFLOW_GUARD && !seq.has_odds_tail() {
        let logs = log_tail_series(seq, s, nn, &kinds)?;
        (logs[0], logs[1])
    } else {
        (tail[0].value.ln(), tail[1].value.ln())
    };
    Ok(Balance { ln_head, ln_head_var, ln_tail, ln_tail_var })
}

/// Solve `ψ'(s) = n` to `|ψ'(s) − n| <= residual_tol`.
///
/// The root is bracketed, then located by safeguarded Newton steps on
/// `log(Σ_{k>n} π_k) − log(Σ_{k<=n} (1 − π_k))` until the step is at
/// rounding level, so quantities evaluated at `s_n` do not depend on the
/// tolerance when `ψ''(s_n)` is small.
pub fn solve(seq: &SequenceDescriptor, n: u64, residual_tol: f64) -> Result<SaddleSolution> {
    if !(residual_tol > 0.0) {
        return Err(Error::Domain(format!("residual tolerance must be positive, got {residual_tol}")));
    }
    check_level(seq, n)?;
    let target = n as f64;
    let eval_tol = (residual_tol / (10.0 * target.max(1.0))).min(1e-13);

    // ψ'(0) < n, so the root is positive
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while !balance(seq, hi, n, eval_tol)?.above() {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::SolverStalled { n, residual: f64::NAN });
        }
    }

    let guess = family_saddle_value(seq, n).unwrap_or(((n + 1) as f64).ln());
    let mut s = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    let mut residual = f64::NAN;
    for _ in 0..MAX_ITER {
        let b = balance(seq, s, n, eval_tol)?;
        residual = b.residual();
        if b.ln_tail == b.ln_head {
            break;
        }
        if b.above() {
            hi = s;
        } else {
            lo = s;
        }
        let newton = match b.log_ratio() {
            Some((g, slope)) => s - g / slope,
            None => s - residual / b.ln_variance().exp(),
        };
        let half = 0.5 * (hi - lo);
        let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { lo + half };
        let step = (next - s).abs();
        if step <= 1e-15 * s.abs().max(1.0) || hi - lo <= 4.0 * f64::EPSILON * s.abs().max(1.0) {
            break;
        }
        s = next;
    }
    if !(residual.abs() <= residual_tol) {
        return Err(Error::SolverStalled { n, residual });
    }
    solution_at(seq, n, s, eval_tol, SaddleMethod::Numeric)
}

/// Solve for every level in `levels` in parallel.
pub fn solve_grid(seq: &SequenceDescriptor, levels: &[u64]) -> Vec<Result<SaddleSolution>> {
    levels.par_iter().map(|&n| solve(seq, n, default_residual_tol(n))).collect()
}

/// Coefficients `A_1, …, A_{ℓ−1}` of
/// `ε(n) = Σ A_i n^{−2iβ}` in `log c + s_n = n^β (1 + ε(n))` for the
/// stretched-exponential family with `β ∈ (0, 1)`, where
/// `ℓ = ⌊(1+β)/(2β)⌋`.
///
/// They are obtained by matching powers of `x = n^{−2β}` in
/// `1 = (1+ε)^{1/β} + (2/β) Σ_{odd j} C(1/β−1, j) c_j (1+ε)^{1/β−1−j} x^{(1+j)/2}`.
pub fn stretched_saddle_coefficients(beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("expansion defined for 0 < beta < 1, got {beta}")));
    }
    let ell = guarded_floor((1.0 + beta) / (2.0 * beta));
    let order = ell.saturating_sub(1);
    let p = 1.0 / beta;
    let jmax = guarded_floor(p).saturating_sub(1);
    let mut eps = vec![0.0; order + 1];
    for i in 1..=order {
        eps[i] = 0.0;
        let mut total = series_pow(&eps, p, order)[i];
        let mut j = 1;
        while j <= jmax {
            let shift = (1 + j) / 2;
            if shift <= i {
                let pw = series_pow(&eps, p - 1.0 - j as f64, order);
                total += 2.0 / beta * binomial(p - 1.0, j) * fermi_moment(j as u32)? * pw[i - shift];
            }
            j += 2;
        }
        eps[i] = -beta * total;
    }
    Ok(eps[1..].to_vec())
}

/// `⌊x⌋`, robust to `x` landing one ulp below an integer.
pub fn guarded_floor(x: f64) -> usize {
    (x + 1e-9 * x.abs().max(1.0)).floor() as usize
}

/// `(1 + ε(x))^p` as a power series in `x` up to `x^order`, where `eps[0]`
/// is ignored and treated as zero.
fn series_pow(eps: &[f64], p: f64, order: usize) -> Vec<f64> {
    let f = |k: usize| if k == 0 { 1.0 } else { eps.get(k).copied().unwrap_or(0.0) };
    let mut g = vec![0.0; order + 1];
    g[0] = 1.0;
    for i in 1..=order {
        let mut acc = 0.0;
        for k in 1..=i {
            acc += (p * k as f64 - (i - k) as f64) * f(k) * g[i - k];
        }
        g[i] = acc / i as f64;
    }
    g
}

/// `α(n) = Σ_{i<ℓ} A_i n^{−2iβ}`.
pub fn stretched_saddle_correction(beta: f64, n: f64) -> Result<f64> {
    let a = stretched_saddle_coefficients(beta)?;
    let x = n.powf(-2.0 * beta);
    Ok(a.iter().enumerate().map(|(i, ai)| ai * x.powi(i as i32 + 1)).sum())
}

fn family_saddle_value(seq: &SequenceDescriptor, n: u64) -> Result<f64> {
    let nf = n as f64;
    match *seq.family() {
        Family::Polynomial { c, beta } => {
            Ok(beta * (nf + 0.5).ln() + beta * (beta * (PI / beta).sin() / (PI * c.powf(1.0 / beta))).ln())
        }
        Family::StretchedExp { c, beta } => {
            if beta < 1.0 {
                Ok(nf.powf(beta) * (1.0 + stretched_saddle_correction(beta, nf)?) - c.ln())
            } else if beta == 1.0 {
                Ok(nf + 0.5 - c.ln())
            } else {
                Ok(nf.powf(beta) + nf.powf((beta - 1.0) / 2.0))
            }
        }
        Family::GnedinSinh { lambda } => Ok(2.0 * (nf + 0.5).ln() + 2.0 * (2.0 / lambda).ln()),
        _ => Err(Error::UnsupportedFamily(format!("no closed-form saddle for {:?}", seq.family()))),
    }
}

/// The approximate saddle used by the closed-form asymptotics, with the
/// residual `ψ'(s) − n` evaluated at it.
pub fn family_saddle(seq: &SequenceDescriptor, n: u64) -> Result<SaddleSolution> {
    let s = family_saddle_value(seq, n)?;
    let tol = 1e-12;
    solution_at(seq, n, s, tol, SaddleMethod::FamilyFormula)
}

/// `I(n) = s_n ψ'(s_n) − ψ(s_n)` at the numeric saddle.
pub fn legendre(seq: &SequenceDescriptor, n: u64) -> Result<f64> {
    let sol = solve(seq, n, default_residual_tol(n))?;
    Ok(sol.s * sol.psi_prime - sol.psi)
}
