//! Saddle-point estimates of `log P{Y = n}` and the constant relating a
//! sequence to a summably perturbed one.

use crate::cgf::{tail_series, SeriesKind};
use crate::error::{Error, Result};
use crate::numeric::{BoundedValue, CompensatedSum};
use crate::regime::{classify, RegimeLabel, RegimeReport, Thresholds};
use crate::saddle::{default_residual_tol, family_saddle, solve, SaddleSolution};
use crate::sequences::{Family, Perturbation, SequenceDescriptor};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Saddle-point estimate at one level. In every regime
/// `P{Y >= n} ~ P{Y = n}`, so both fields carry the same value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub n: u64,
    pub log_point: f64,
    pub log_tail: f64,
    pub regime: RegimeLabel,
    pub c0_used: Option<f64>,
    pub saddle: SaddleSolution,
}

/// Which saddle to evaluate the estimate at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaddleChoice {
    #[default]
    Numeric,
    Family,
}

/// The estimate for a known regime at a given saddle.
pub fn estimate_at(sol: SaddleSolution, regime: RegimeLabel, c0: Option<f64>) -> Result<TailEstimate> {
    let base = sol.psi - sol.s * sol.n as f64;
    let (log_point, c0_used) = match regime {
        RegimeLabel::B => (base - 0.5 * ((2.0 * PI).ln() + sol.ln_psi_double_prime), None),
        RegimeLabel::A => (base, None),
        RegimeLabel::C => {
            let c0 = c0.ok_or_else(|| Error::CannotEstimate("regime C needs the constant c0".into()))?;
            (c0.ln() + base, Some(c0))
        }
        RegimeLabel::Undetermined => {
            return Err(Error::CannotEstimate("regime undetermined; supply an override".into()))
        }
    };
    Ok(TailEstimate { n: sol.n, log_point, log_tail: log_point, regime, c0_used, saddle: sol })
}

/// Default classification grid around `n`.
pub fn default_grid(n: u64) -> Vec<u64> {
    let n = n.max(2);
    vec![n, n + n / 2, 2 * n, 3 * n]
}

/// Estimate `log P{Y = n}`.
///
/// With `regime_override = None` the regime (and, in regime C, `c₀`) comes
/// from [`classify`] on [`default_grid`]. An override for regime C still
/// classifies to obtain `c₀`.
pub fn estimate(
    seq: &SequenceDescriptor,
    n: u64,
    regime_override: Option<RegimeLabel>,
    saddle: SaddleChoice,
) -> Result<TailEstimate> {
    let report = match regime_override {
        Some(RegimeLabel::A) | Some(RegimeLabel::B) => None,
        _ => Some(classify(seq, &default_grid(n), &Thresholds::default())?),
    };
    estimate_with_report(seq, n, regime_override, report.as_ref(), saddle)
}

/// As [`estimate`] with a precomputed classification.
pub fn estimate_with_report(
    seq: &SequenceDescriptor,
    n: u64,
    regime_override: Option<RegimeLabel>,
    report: Option<&RegimeReport>,
    saddle: SaddleChoice,
) -> Result<TailEstimate> {
    let regime = regime_override.or(report.map(|r| r.label)).unwrap_or(RegimeLabel::Undetermined);
    let c0 = report.and_then(|r| r.c_data.as_ref()).and_then(|d| d.c0).map(|v| v.value);
    let sol = match saddle {
        SaddleChoice::Numeric => solve(seq, n, default_residual_tol(n))?,
        SaddleChoice::Family => family_saddle(seq, n)?,
    };
    estimate_at(sol, regime, c0)
}

/// Condition sums of the transfer at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferCondition {
    pub n: u64,
    pub s: f64,
    /// `s_n e^{−s_n} Σ_{k<=n} |ε_k|/r_k`.
    pub head: f64,
    /// `s_n e^{s_n} Σ_{k>n} |ε_k| r_k`.
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    /// `A = Π (1 + ε_k)`.
    pub a: BoundedValue,
    pub log_a: BoundedValue,
    pub conditions: Vec<TransferCondition>,
    /// Whether both condition sums decrease from the first to the last level.
    pub decaying: bool,
}

/// `Σ log(1 + ε_k)` with a truncation bound.
fn log_product(perturbed: &SequenceDescriptor, tol: f64) -> Result<BoundedValue> {
    let (base, perturbation) = match perturbed.family() {
        Family::Perturbed { perturbation, .. } => (perturbed.base().expect("base"), perturbation),
        _ => return Ok(BoundedValue::new(0.0, 0.0, 0)),
    };
    match perturbation {
        Perturbation::List { epsilons } => {
            let acc: CompensatedSum = epsilons.iter().map(|e| e.ln_1p()).collect();
            Ok(BoundedValue::new(acc.value(), 0.0, epsilons.len()))
        }
        Perturbation::Negated { .. } => {
            // log(1 − v_k) summed through the negated sequence
            let neg = perturbed.negated().expect("negated sequence");
            let v = tail_series(neg, 0.0, tol, 0, &[SeriesKind::NegLogComplement])?[0];
            Ok(BoundedValue::new(-v.value, v.error_bound, v.terms_used))
        }
        Perturbation::ExpSaturation => {
            // |log(1 + ε_k)| <= |ε_k|/(1 − |ε_k|) and |ε_k| <= r_k/2 <= 1/2
            let mut acc = CompensatedSum::new();
            let cap = crate::numeric::max_terms();
            let k0 = base.monotone_from();
            let mut k = 0;
            loop {
                if k >= k0 {
                    let bound = base.ln_tail_bound(k)?.exp();
                    if bound <= tol {
                        return Ok(BoundedValue::new(acc.value(), bound, k));
                    }
                }
                if k >= cap {
                    return Err(Error::Truncation { terms: cap, best_bound: base.ln_tail_bound(k)?.exp() });
                }
                k += 1;
                acc.add(perturbed.epsilon(k)?.ln_1p());
            }
        }
    }
}

/// The constant `A = Π(1 + ε_k)` relating `base` to `perturbed`, and the
/// condition sums along `n_check` that justify transferring asymptotics.
pub fn transfer(base: &SequenceDescriptor, perturbed: &SequenceDescriptor, n_check: &[u64]) -> Result<TransferReport> {
    if let Some(b) = perturbed.base() {
        if b.family() != base.family() {
            return Err(Error::TransferInvalid("perturbed sequence is not built on this base".into()));
        }
    }
    let log_a = log_product(perturbed, 1e-14)?;
    let a = BoundedValue::new(log_a.value.exp(), log_a.value.exp() * log_a.error_bound.exp_m1(), log_a.terms_used);

    let mut conditions = Vec::with_capacity(n_check.len());
    for &n in n_check {
        let s = solve(base, n, default_residual_tol(n))?.s;
        let nn = n as usize;
        let mut head = CompensatedSum::new();
        for k in 1..=nn {
            let t = base.terms(k)?;
            head.add((perturbed.epsilon(k)?.abs().ln() - t.ln_r - s).exp());
        }
        let tail = tail_condition(base, perturbed, nn, s)?;
        conditions.push(TransferCondition { n, s, head: s * head.value(), tail: s * tail });
    }
    let finite = conditions.iter().all(|c| c.head.is_finite() && c.tail.is_finite());
    if !finite {
        return Err(Error::TransferInvalid("condition sums diverge".into()));
    }
    let decaying = match (conditions.first(), conditions.last()) {
        (Some(f), Some(l)) if conditions.len() > 1 => (l.head < f.head || l.head == 0.0) && l.tail <= f.tail,
        _ => true,
    };
    if !decaying {
        return Err(Error::TransferInvalid("condition sums do not decay along the grid".into()));
    }
    Ok(TransferReport { a, log_a, conditions, decaying })
}

/// `e^{s} Σ_{k>n} |ε_k| r_k`, summed until the remainder
/// `r_{K+1} e^s Σ_{k>K} |ε_k|` is negligible.
fn tail_condition(base: &SequenceDescriptor, perturbed: &SequenceDescriptor, n: usize, s: f64) -> Result<f64> {
    let cap = crate::numeric::max_terms();
    let mut acc = CompensatedSum::new();
    let mut k = n;
    let k0 = base.monotone_from();
    loop {
        k += 1;
        let t = base.terms(k)?;
        let e = perturbed.epsilon(k)?.abs();
        acc.add((e.ln() + t.ln_r + s).exp());
        if k >= k0 && (k - n) % 32 == 0 {
            let next = base.terms(k + 1)?.ln_r;
            let eps_tail = perturbed.ln_epsilon_tail_bound(k)?;
            let rest = (next + s + eps_tail).exp();
            if rest <= 1e-6 * acc.value() || rest == 0.0 {
                return Ok(acc.value());
            }
        }
        if k - n > cap {
            return Err(Error::Truncation { terms: cap, best_bound: f64::INFINITY });
        }
    }
}
