//! The cumulant generating function `ψ(s) = Σ log(r_k e^s + 1 − r_k)` of
//! `Y = Σ 1_{A_k}`, its first two derivatives, and the exponentially tilted
//! success probabilities.
//!
//! All series are summed with compensated summation and come with a rigorous
//! truncation bound. Per-term arithmetic happens on `z_k = logit(r_k) + s`,
//! so that neither `e^s` nor tiny `r_k` is ever formed on its own.
//!
//! Truncation uses one of two strategies:
//! * a family tail bound `Σ_{k>K} r_k <= T(K)` scaled by `e^{max(s,0)}`,
//!   adequate for families whose probabilities decay quickly;
//! * for the power-law families, the exact expansion of every tail term in
//!   powers of the odds `ρ_k = r_k/(1−r_k)`, summed in closed form through
//!   Hurwitz zeta values. This reaches full precision with a few thousand
//!   terms where the naive bound would need billions.

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, max_terms, softplus, BoundedValue, CompensatedSum};
use crate::sequences::{Family, Perturbation, SequenceDescriptor, TermLogs};

/// Default relative tolerance for series evaluation.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative rounding allowance per unit of absolute term mass.
const ROUNDING: f64 = 8.0 * f64::EPSILON;

/// Largest order used by the odds expansion.
const MAX_ODDS_ORDER: usize = 400;

/// Which per-indicator quantity a series sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// `ψ_k(s) = log(r_k e^s + 1 − r_k)`.
    Psi,
    /// Tilted probability `π_k(s)`, the terms of `ψ'`.
    TiltedMean,
    /// `π_k(s)(1 − π_k(s))`, the terms of `ψ''`.
    TiltedVariance,
    /// `r_k` itself.
    Raw,
    /// `−log(1 − r_k) = log(1 + ρ_k)`.
    NegLogComplement,
}

/// `ψ`, `ψ'` and `ψ''` at one tilt, from a single pass over the sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfPoint {
    pub s: f64,
    pub psi: BoundedValue,
    pub psi_prime: BoundedValue,
    pub psi_double_prime: BoundedValue,
}

fn tilted_logit(t: &TermLogs, s: f64) -> f64 {
    if t.ln_q == f64::NEG_INFINITY {
        f64::INFINITY
    } else if t.ln_r == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        t.ln_r - t.ln_q + s
    }
}

/// `ψ_k(s)` in a form that neither overflows nor cancels.
fn psi_term(t: &TermLogs, s: f64) -> f64 {
    if s == 0.0 || t.ln_r == f64::NEG_INFINITY {
        return 0.0;
    }
    if t.ln_q == f64::NEG_INFINITY {
        return s;
    }
    let x = t.ln_r + s;
    if x > 0.0 {
        x + (t.ln_q - x).exp().ln_1p()
    } else if s > 0.0 {
        // log(1 + r (e^s − 1))
        // log(e^s − 1) = s + log(1 − e^{−s}) stays finite for large s
        (t.ln_r + s + (-(-s).exp()).ln_1p()).exp().ln_1p()
    } else {
        // log(1 − r (1 − e^s))
        (-(t.ln_r + (-s.exp_m1()).ln()).exp()).ln_1p()
    }
}

fn term(kind: SeriesKind, t: &TermLogs, s: f64) -> f64 {
    match kind {
        SeriesKind::Psi => psi_term(t, s),
        SeriesKind::TiltedMean => {
            let z = tilted_logit(t, s);
            if z == f64::INFINITY {
                1.0
            } else {
                (-softplus(-z)).exp()
            }
        }
        SeriesKind::TiltedVariance => {
            let z = tilted_logit(t, s);
            if z.is_infinite() {
                0.0
            } else {
                (-softplus(z) - softplus(-z)).exp()
            }
        }
        SeriesKind::Raw => t.prob(),
        SeriesKind::NegLogComplement => -t.ln_q,
    }
}

/// Upper bound on `Σ_{k>K} |term_k|` given the family bound `T(K)` on
/// `Σ_{k>K} r_k`. Valid for `K >= k₀`.
fn naive_tail(kind: SeriesKind, ln_tail: f64, s: f64, next: &TermLogs) -> f64 {
    match kind {
        SeriesKind::Raw => ln_tail.exp(),
        // −log(1 − r) <= r/(1 − r) <= r/(1 − r_{K+1})
        SeriesKind::NegLogComplement => (ln_tail - next.ln_q).exp(),
        SeriesKind::TiltedMean | SeriesKind::TiltedVariance => (ln_tail + s.max(0.0)).exp(),
        SeriesKind::Psi => {
            if s >= 0.0 {
                // log(1 + r(e^s − 1)) <= r e^s
                (ln_tail + s).exp()
            } else {
                // −log(1 − r(1 − e^s)) <= r/(1 − r) <= r/(1 − r_{K+1})
                (ln_tail - next.ln_q).exp()
            }
        }
    }
}

fn check_args(s: f64, tol: f64) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("tilt must be finite, got {s}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Sum the chosen per-indicator quantities over `k > from`, each to
/// `error_bound <= tol · max(1, |value|)`.
pub fn tail_series(
    seq: &SequenceDescriptor,
    s: f64,
    tol: f64,
    from: usize,
    kinds: &[SeriesKind],
) -> Result<Vec<BoundedValue>> {
    tail_series_scaled(seq, s, tol, 1.0, from, kinds)
}

/// As [`tail_series`] with target `error_bound <= tol · max(floor, |value|)`;
/// a tiny `floor` asks for relative accuracy on small sums.
pub fn tail_series_scaled(
    seq: &SequenceDescriptor,
    s: f64,
    tol: f64,
    floor: f64,
    from: usize,
    kinds: &[SeriesKind],
) -> Result<Vec<BoundedValue>> {
    check_args(s, tol)?;
    let cap = max_terms();
    let mut acc = vec![CompensatedSum::new(); kinds.len()];
    let mut mass = vec![0.0f64; kinds.len()];
    let add = |k: usize, acc: &mut Vec<CompensatedSum>, mass: &mut Vec<f64>| -> Result<TermLogs> {
        let t = seq.terms(k)?;
        for (i, &kind) in kinds.iter().enumerate() {
            let v = term(kind, &t, s);
            acc[i].add(v);
            mass[i] += v.abs();
        }
        Ok(t)
    };
    let finish = |acc: &[CompensatedSum], mass: &[f64], extra: &[f64], used: usize| -> Vec<BoundedValue> {
        acc.iter()
            .zip(mass)
            .zip(extra)
            .map(|((a, m), e)| BoundedValue::new(a.value(), e + ROUNDING * m, used))
            .collect()
    };

    if let Some(m) = seq.support() {
        if m.saturating_sub(from) > cap {
            return Err(Error::Truncation { terms: cap, best_bound: f64::INFINITY });
        }
        for k in from + 1..=m {
            add(k, &mut acc, &mut mass)?;
        }
        let zeros = vec![0.0; kinds.len()];
        return Ok(finish(&acc, &mass, &zeros, m.saturating_sub(from)));
    }

    if seq.has_odds_tail() {
        return odds_series(seq, s, tol, floor, from, kinds);
    }
    if seq.base().is_some_and(|b| b.has_odds_tail() && b.support().is_none()) {
        return perturbed_series(seq, s, tol, floor, from, kinds);
    }

    let k0 = seq.monotone_from();
    let mut k = from;
    let mut next_check = from.max(k0.saturating_sub(1));
    let mut best = f64::INFINITY;
    loop {
        if k >= next_check && k >= k0.saturating_sub(1) {
            let ln_tail = seq.ln_tail_bound(k)?;
            let next = seq.terms(k + 1)?;
            let mut ok = true;
            let mut bounds = Vec::with_capacity(kinds.len());
            let mut worst: f64 = 0.0;
            for (i, &kind) in kinds.iter().enumerate() {
                let b = naive_tail(kind, ln_tail, s, &next);
                let limit = tol * acc[i].value().abs().max(floor);
                ok &= b <= limit;
                worst = worst.max(b / limit);
                bounds.push(b);
            }
            best = best.min(bounds.iter().copied().fold(0.0, f64::max));
            if ok {
                return Ok(finish(&acc, &mass, &bounds, k - from));
            }
            // spacing grows with k; the tail bound is monotone so no accuracy is lost
            let step = if worst.is_finite() && worst < 4.0 { 16 } else { (k / 4).max(16) };
            next_check = k + step;
        }
        if k - from >= cap {
            return Err(Error::Truncation { terms: cap, best_bound: best });
        }
        k += 1;
        add(k, &mut acc, &mut mass)?;
    }
}

/// Logarithms of `Σ_{k>from}` of the tilted mean, tilted variance or raw
/// terms, summed in the log domain. Meant for rapidly decaying sequences
/// whose tails underflow in linear arithmetic; the relative truncation error
/// is below `1e-16`.
pub fn log_tail_series(seq: &SequenceDescriptor, s: f64, from: usize, kinds: &[SeriesKind]) -> Result<Vec<f64>> {
    check_args(s, 1.0)?;
    let log_term = |kind: SeriesKind, t: &TermLogs| -> Result<f64> {
        let z = tilted_logit(t, s);
        Ok(match kind {
            SeriesKind::Raw => t.ln_r,
            SeriesKind::TiltedMean => -softplus(-z),
            SeriesKind::TiltedVariance => {
                if z.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    -softplus(z) - softplus(-z)
                }
            }
            SeriesKind::Psi | SeriesKind::NegLogComplement => {
                return Err(Error::Unsupported("log-domain tail of this series".into()))
            }
        })
    };
    let cap = max_terms();
    let k0 = seq.monotone_from();
    let mut out = vec![f64::NEG_INFINITY; kinds.len()];
    let mut k = from;
    loop {
        if seq.support().is_some_and(|m| k >= m) {
            return Ok(out);
        }
        k += 1;
        let t = seq.terms(k)?;
        for (i, &kind) in kinds.iter().enumerate() {
            out[i] = log_add_exp(out[i], log_term(kind, &t)?);
        }
        if k >= k0 && (k - from) % 8 == 0 {
            let ln_raw = seq.ln_tail_bound(k)?;
            let done = kinds.iter().zip(&out).all(|(&kind, &v)| {
                let bound = if kind == SeriesKind::Raw { ln_raw } else { ln_raw + s.max(0.0) };
                bound - v <= -37.0
            });
            if done {
                return Ok(out);
            }
        }
        if k - from >= cap {
            return Err(Error::Truncation { terms: cap, best_bound: f64::INFINITY });
        }
    }
}

/// Perturbations of a power-law family: sum directly up to `K`, then use
/// the base odds expansion. Beyond an explicit list the terms coincide with
/// the base. For `ε_k <= 0` each term moves by at most
/// `L · r_k |ε_k| <= L r_{K+1} |ε_k|`, with `L` the largest slope of the term
/// as a function of the probability on `[0, r_{K+1}]`.
fn perturbed_series(
    seq: &SequenceDescriptor,
    s: f64,
    tol: f64,
    floor: f64,
    from: usize,
    kinds: &[SeriesKind],
) -> Result<Vec<BoundedValue>> {
    let base = seq.base().expect("perturbed descriptor");
    let cap = max_terms();
    let mut acc = vec![CompensatedSum::new(); kinds.len()];
    let mut mass = vec![0.0f64; kinds.len()];
    let mut k = from;
    let add_to = |upto: usize, k: &mut usize, acc: &mut Vec<CompensatedSum>, mass: &mut Vec<f64>| -> Result<()> {
        while *k < upto {
            *k += 1;
            let t = seq.terms(*k)?;
            for (i, &kind) in kinds.iter().enumerate() {
                let v = term(kind, &t, s);
                acc[i].add(v);
                mass[i] += v.abs();
            }
        }
        Ok(())
    };
    let combine = |acc: &[CompensatedSum], mass: &[f64], tail: &[BoundedValue], extra: &[f64], used: usize| {
        acc.iter()
            .zip(mass)
            .zip(tail)
            .zip(extra)
            .map(|(((a, m), t), e)| {
                let mut sum = *a;
                sum.add(t.value);
                BoundedValue::new(sum.value(), t.error_bound + e + ROUNDING * m, used + t.terms_used)
            })
            .collect::<Vec<_>>()
    };

    let exact_from = match seq.family() {
        Family::Perturbed { perturbation: Perturbation::List { epsilons }, .. } => Some(epsilons.len()),
        _ => None,
    };
    if let Some(m) = exact_from {
        add_to(from.max(m), &mut k, &mut acc, &mut mass)?;
        let tail = odds_series(base, s, tol, floor, k, kinds)?;
        let zeros = vec![0.0; kinds.len()];
        return Ok(combine(&acc, &mass, &tail, &zeros, k - from));
    }

    let mut big_k = from.max(seq.monotone_from()).max(base.monotone_from()).max(16);
    let mut best = f64::INFINITY;
    loop {
        add_to(big_k, &mut k, &mut acc, &mut mass)?;
        let r_max = base.terms(big_k + 1)?.prob();
        let shift = r_max * seq.ln_epsilon_tail_bound(big_k)?.exp();
        let damp = 1.0 - r_max;
        let es = s.exp();
        let extra: Vec<f64> = kinds
            .iter()
            .map(|&kind| {
                let slope = match kind {
                    SeriesKind::Raw => 1.0,
                    SeriesKind::NegLogComplement => 1.0 / damp,
                    SeriesKind::Psi => s.exp_m1().abs() / damp,
                    SeriesKind::TiltedMean | SeriesKind::TiltedVariance => es / (damp * damp),
                };
                slope * shift
            })
            .collect();
        best = best.min(extra.iter().copied().fold(0.0, f64::max));
        let ok = extra.iter().enumerate().all(|(i, e)| *e <= 0.5 * tol * acc[i].value().abs().max(floor));
        if ok {
            let tail = odds_series(base, s, 0.5 * tol, floor, big_k, kinds)?;
            return Ok(combine(&acc, &mass, &tail, &extra, big_k - from));
        }
        if big_k - from >= cap {
            return Err(Error::Truncation { terms: cap, best_bound: best });
        }
        big_k = (big_k * 2).min(from + cap);
    }
}

/// Power-law families: sum directly up to `K` with `max(e^s, 1) ρ_{K+1} <= 1/2`,
/// then expand each remaining term in powers of `ρ_k` and sum by order.
fn odds_series(
    seq: &SequenceDescriptor,
    s: f64,
    tol: f64,
    floor: f64,
    from: usize,
    kinds: &[SeriesKind],
) -> Result<Vec<BoundedValue>> {
    let cap = max_terms();
    let threshold = 0.5 * (-s.max(0.0)).exp();
    let start = seq
        .odds_tail_start(threshold, from)
        .ok_or_else(|| Error::Unsupported("odds tail model".into()))?;
    if start - from > cap {
        return Err(Error::Truncation { terms: cap, best_bound: f64::INFINITY });
    }
    let mut acc = vec![CompensatedSum::new(); kinds.len()];
    let mut mass = vec![0.0f64; kinds.len()];
    for k in from + 1..=start {
        let t = seq.terms(k)?;
        for (i, &kind) in kinds.iter().enumerate() {
            let v = term(kind, &t, s);
            acc[i].add(v);
            mass[i] += v.abs();
        }
    }

    let next = seq.terms(start + 1)?;
    let ln_rho = next.ln_r - next.ln_q;
    let rho = ln_rho.exp();
    let x = (ln_rho + s).exp();
    let xi = x.max(rho);

    // orders beyond M contribute at most R̃_1 (M+1) ξ^{M+1}/(1−ξ)²
    let probe = seq.odds_tail(start, 1)?.expect("odds model present");
    let r1 = probe.scaled[0] + probe.errors[0];
    // the leading order of the tail is about ξ R̃_1
    let target = |i: usize, acc: &[CompensatedSum]| 0.25 * tol * (acc[i].value().abs() + 0.5 * xi * r1).max(floor);
    let mut order = 1;
    let remainder = |m: usize| r1 * (m as f64 + 1.0) * xi.powi(m as i32 + 1) / ((1.0 - xi) * (1.0 - xi));
    while order < MAX_ODDS_ORDER && (0..kinds.len()).any(|i| remainder(order) > target(i, &acc)) {
        order += 1;
    }
    let tail = seq.odds_tail(start, order)?.expect("odds model present");

    let mut out = Vec::with_capacity(kinds.len());
    for (i, &kind) in kinds.iter().enumerate() {
        let mut t_acc = CompensatedSum::new();
        let mut t_err = remainder(order);
        let mut xm = 1.0;
        let mut rm = 1.0;
        for m in 1..=order {
            xm *= x;
            rm *= rho;
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            let mf = m as f64;
            let coef = match kind {
                SeriesKind::TiltedMean => xm,
                SeriesKind::TiltedVariance => mf * xm,
                SeriesKind::Psi => (xm - rm) / mf,
                SeriesKind::Raw => rm,
                SeriesKind::NegLogComplement => rm / mf,
            };
            let contrib = sign * coef * tail.scaled[m - 1];
            t_acc.add(contrib);
            t_err += coef.abs() * tail.errors[m - 1] + ROUNDING * contrib.abs();
        }
        acc[i].add(t_acc.value());
        mass[i] += t_acc.value().abs();
        out.push(BoundedValue::new(acc[i].value(), t_err + ROUNDING * mass[i], start - from));
    }
    Ok(out)
}

/// `ψ(s)`.
pub fn psi(seq: &SequenceDescriptor, s: f64, tol: f64) -> Result<BoundedValue> {
    if s == 0.0 {
        check_args(s, tol)?;
        return Ok(BoundedValue::new(0.0, 0.0, 0));
    }
    Ok(tail_series(seq, s, tol, 0, &[SeriesKind::Psi])?[0])
}

/// `ψ'(s) = Σ π_k(s)`, the mean of `Y` under the tilted measure.
pub fn psi_prime(seq: &SequenceDescriptor, s: f64, tol: f64) -> Result<BoundedValue> {
    Ok(tail_series(seq, s, tol, 0, &[SeriesKind::TiltedMean])?[0])
}

/// `ψ''(s) = Σ π_k(s)(1 − π_k(s))`, the tilted variance and Hayman's `b(e^s)`.
pub fn psi_double_prime(seq: &SequenceDescriptor, s: f64, tol: f64) -> Result<BoundedValue> {
    Ok(tail_series(seq, s, tol, 0, &[SeriesKind::TiltedVariance])?[0])
}

/// `ψ`, `ψ'`, `ψ''` together.
pub fn evaluate(seq: &SequenceDescriptor, s: f64, tol: f64) -> Result<CgfPoint> {
    let v = tail_series(seq, s, tol, 0, &[SeriesKind::Psi, SeriesKind::TiltedMean, SeriesKind::TiltedVariance])?;
    let psi = if s == 0.0 { BoundedValue::new(0.0, 0.0, v[0].terms_used) } else { v[0] };
    Ok(CgfPoint { s, psi, psi_prime: v[1], psi_double_prime: v[2] })
}

/// `π_k(s) = r_k e^s/(r_k e^s + 1 − r_k)`.
pub fn tilted_prob(seq: &SequenceDescriptor, s: f64, k: usize) -> Result<f64> {
    Ok(term(SeriesKind::TiltedMean, &seq.terms(k)?, s))
}

/// The sequence of tilted success probabilities at a fixed tilt.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedSequence {
    pub base: SequenceDescriptor,
    pub s: f64,
}

impl TiltedSequence {
    pub fn new(base: SequenceDescriptor, s: f64) -> Result<Self> {
        check_args(s, 1.0)?;
        Ok(Self { base, s })
    }

    pub fn tilted_prob(&self, k: usize) -> Result<f64> {
        tilted_prob(&self.base, self.s, k)
    }

    /// `log π_k(s)` and `log(1 − π_k(s))`.
    pub fn tilted_terms(&self, k: usize) -> Result<TermLogs> {
        let z = tilted_logit(&self.base.terms(k)?, self.s);
        Ok(TermLogs { ln_r: -softplus(-z), ln_q: -softplus(z) })
    }
}

/// `Σ_{k<=n} (1 − π_k(s))`, exactly computed (finite sum).
pub fn head_sum(seq: &SequenceDescriptor, s: f64, n: usize) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for k in 1..=n {
        let z = tilted_logit(&seq.terms(k)?, s);
        acc.add(if z == f64::INFINITY { 0.0 } else { (-softplus(z)).exp() });
    }
    Ok(acc.value())
}

/// `Σ_{k>n} π_k(s)` with a truncation bound.
pub fn tail_sum(seq: &SequenceDescriptor, s: f64, n: usize, tol: f64) -> Result<BoundedValue> {
    Ok(tail_series(seq, s, tol, n, &[SeriesKind::TiltedMean])?[0])
}

/// `Σ_{k>n} r_k` with a truncation bound.
pub fn raw_tail_sum(seq: &SequenceDescriptor, n: usize, tol: f64) -> Result<BoundedValue> {
    Ok(tail_series(seq, 0.0, tol, n, &[SeriesKind::Raw])?[0])
}

/// Tail sum minus head sum at `(s, n)`; equals `ψ'(s) − n` identically, and
/// vanishes at the saddle point.
pub fn core_identity_gap(seq: &SequenceDescriptor, s: f64, n: usize) -> Result<f64> {
    let head = head_sum(seq, s, n)?;
    let tail = tail_sum(seq, s, n, 1e-14)?;
    Ok(tail.value - head)
}
