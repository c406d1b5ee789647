//! Success-probability sequences `(r_k)`.
//!
//! A [`SequenceDescriptor`] is an immutable, validated description of one
//! sequence. Probabilities are evaluated in log form (`log r_k` and
//! `log(1 − r_k)`) because many families underflow long before their terms
//! stop mattering once they are multiplied by a large tilt `e^s`.
//!
//! Every descriptor exposes
//! * an index `k₀` beyond which `r_k` is nonincreasing,
//! * a closed-form upper bound on `Σ_{k>K} r_k`,
//! * for the power-law families, the power sums `Σ_{k>K} ρ_k^m` of the odds
//!   `ρ_k = r_k/(1 − r_k)`, which let slowly decaying tails be summed
//!   exactly instead of merely bounded.

use crate::error::{Error, Result};
use crate::numeric::{log1m_exp, CompensatedSum};
use crate::specfun::{
    hurwitz_scaled, ln_gamma, ln_regularized_lower_gamma, ln_regularized_upper_gamma, ln_upper_gamma,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Number of initial terms scanned when a family's monotonicity index has to
/// be found numerically.
const MONOTONE_SCAN: usize = 10_000;

/// Positive weight sequences `w_k`, `k >= 1`, used as sampling distributions
/// for the Poissonized range and as record weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Weights {
    /// `scale · ratio^k`.
    Geometric { scale: f64, ratio: f64 },
    /// `scale · k^{-exponent}`.
    Power { scale: f64, exponent: f64 },
    /// `scale · exp(-k^beta)`.
    StretchedExp { scale: f64, beta: f64 },
    /// Finitely many weights, zero afterwards.
    List { values: Vec<f64> },
}

impl Weights {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        match *self {
            Weights::Geometric { scale, ratio } => {
                if !(scale > 0.0 && scale.is_finite() && ratio > 0.0 && ratio < 1.0) {
                    return bad(format!("geometric weights need scale > 0, 0 < ratio < 1; got {scale}, {ratio}"));
                }
            }
            Weights::Power { scale, exponent } => {
                if !(scale > 0.0 && scale.is_finite() && exponent > 1.0 && exponent.is_finite()) {
                    return bad(format!("power weights need scale > 0, exponent > 1; got {scale}, {exponent}"));
                }
            }
            Weights::StretchedExp { scale, beta } => {
                if !(scale > 0.0 && scale.is_finite() && beta > 0.0 && beta.is_finite()) {
                    return bad(format!("stretched weights need scale > 0, beta > 0; got {scale}, {beta}"));
                }
            }
            Weights::List { ref values } => {
                if values.is_empty() || values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return bad("weight list must be nonempty with positive finite entries".into());
                }
            }
        }
        Ok(())
    }

    fn ln_weight(&self, k: usize) -> f64 {
        let kf = k as f64;
        match *self {
            Weights::Geometric { scale, ratio } => scale.ln() + kf * ratio.ln(),
            Weights::Power { scale, exponent } => scale.ln() - exponent * kf.ln(),
            Weights::StretchedExp { scale, beta } => scale.ln() - kf.powf(beta),
            Weights::List { ref values } => values.get(k - 1).map_or(f64::NEG_INFINITY, |v| v.ln()),
        }
    }

    /// Log of an upper bound on `Σ_{k>K} w_k`.
    fn ln_tail(&self, big_k: usize) -> f64 {
        let kf = big_k as f64;
        match *self {
            Weights::Geometric { scale, ratio } => scale.ln() + (kf + 1.0) * ratio.ln() - (1.0 - ratio).ln(),
            Weights::Power { scale, exponent } => {
                if big_k == 0 {
                    (scale * (1.0 + 1.0 / (exponent - 1.0))).ln()
                } else {
                    scale.ln() + (1.0 - exponent) * kf.ln() - (exponent - 1.0).ln()
                }
            }
            Weights::StretchedExp { scale, beta } => stretched_ln_tail(scale, beta, big_k),
            Weights::List { ref values } => {
                let rest: f64 = values.iter().skip(big_k).sum();
                rest.ln()
            }
        }
    }

    fn support(&self) -> Option<usize> {
        match self {
            Weights::List { values } => Some(values.len()),
            _ => None,
        }
    }

    fn monotone_from(&self) -> usize {
        match self {
            Weights::List { values } => monotone_index(values),
            _ => 1,
        }
    }
}

/// Smallest 1-based index from which `values` is nonincreasing.
fn monotone_index(values: &[f64]) -> usize {
    let mut k0 = 1;
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            k0 = i + 1;
        }
    }
    k0
}

/// `log` of an upper bound on `Σ_{k>K} c·exp(-k^β)`.
fn stretched_ln_tail(c: f64, beta: f64, big_k: usize) -> f64 {
    let kf = big_k as f64;
    if beta == 1.0 {
        // c · Σ_{k>=K} e^{-k}, a geometric majorant
        return c.ln() - kf - (1.0 - (-1.0f64).exp()).ln();
    }
    // c ∫_K^∞ e^{-x^β} dx = (c/β) Γ(1/β, K^β)
    match ln_upper_gamma(1.0 / beta, kf.powf(beta)) {
        Ok(v) => c.ln() - beta.ln() + v,
        Err(_) => (c / beta).ln() + ln_gamma(1.0 / beta),
    }
}

/// Which event of the Poissonized occupancy count is indicated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RangeVariant {
    /// The value appears at least `j` times.
    AtLeast { j: u32 },
    /// The value appears exactly `j` times.
    Exactly { j: u32 },
    /// The value appears a positive even number of times.
    Even,
}

/// How a base sequence is perturbed into `u_k = r_k (1 + ε_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Perturbation {
    /// Explicit `ε_1, …, ε_m`, zero afterwards.
    List { epsilons: Vec<f64> },
    /// `ε_k = −v_k` for another probability sequence `v`.
    Negated { sequence: Box<Family> },
    /// `1 + ε_k = (1 − e^{−r_k})/r_k`, i.e. `u_k = 1 − e^{−r_k}`.
    ExpSaturation,
}

/// Family tag and parameters of a sequence. This is also the JSON schema:
/// `{"family": "polynomial", "c": 1.0, "beta": 2.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// `r_k = c k^{-β}`, `β > 1`, `0 < c <= 1`.
    Polynomial { c: f64, beta: f64 },
    /// `r_k = c exp(-k^β)`, `β > 0`, `0 < c <= e`.
    StretchedExp { c: f64, beta: f64 },
    /// Occupancy indicators of a Poisson(`t`) sample from the weights `p_k`.
    PoissonizedRange { t: f64, weights: Weights, variant: RangeVariant },
    /// Record indicators `r_i = α_i/(α_1 + … + α_i)`.
    RecordsFAlpha { alpha: Weights },
    /// `r_k = λ²/((πk)² + λ²)`.
    GnedinSinh { lambda: f64 },
    /// `r_k = 4λ²/((π(2k−1))² + 4λ²)`.
    GnedinCosh { lambda: f64 },
    /// `r_k = P{Gamma(k, 1) <= t}`, the exponential-jump renewal count.
    GinibreGamma { t: f64 },
    /// Finitely many probabilities.
    ExplicitList { values: Vec<f64> },
    /// `u_k = r_k (1 + ε_k)`.
    Perturbed { base: Box<Family>, perturbation: Perturbation },
}

/// Logs of `r_k` and `1 − r_k` for one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermLogs {
    pub ln_r: f64,
    pub ln_q: f64,
}

impl TermLogs {
    /// `log(r_k/(1 − r_k))`; `+∞` when `r_k = 1`, `−∞` when `r_k = 0`.
    pub fn logit(&self) -> f64 {
        if self.ln_q == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            self.ln_r - self.ln_q
        }
    }

    pub fn prob(&self) -> f64 {
        self.ln_r.exp()
    }
}

/// Upper bound on `Σ_{k>K} r_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSumBound {
    pub k: usize,
    pub bound: f64,
    pub ln_bound: f64,
}

/// Power sums of the odds beyond an index, scaled for safe arithmetic.
///
/// `scaled[m-1] = (Σ_{k>K} ρ_k^m) / ρ_{K+1}^m` with a matching absolute error
/// in `errors`.
#[derive(Debug, Clone, PartialEq)]
pub struct OddsTail {
    pub start: usize,
    pub rho_next: f64,
    pub scaled: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Closed-form odds of the power-law families.
#[derive(Debug, Clone, Copy)]
enum OddsModel {
    /// `ρ_k = y/(1−y)` with `y = c k^{-β}`.
    Power { c: f64, beta: f64 },
    /// `ρ_k = v (k − shift)^{-2}`.
    ShiftedSquare { v: f64, shift: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Cache {
    None,
    /// Prefix sums `S_0 = 0, S_1, …` of record weights.
    Prefix(Vec<f64>),
}

/// A validated, immutable success-probability sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct SequenceDescriptor {
    family: Family,
    monotone_from: usize,
    support: Option<usize>,
    cache: Cache,
    inner: Option<Box<SequenceDescriptor>>,
    negated: Option<Box<SequenceDescriptor>>,
}

impl TryFrom<Family> for SequenceDescriptor {
    type Error = Error;
    fn try_from(f: Family) -> Result<Self> {
        SequenceDescriptor::new(f)
    }
}

impl From<SequenceDescriptor> for Family {
    fn from(s: SequenceDescriptor) -> Family {
        s.family
    }
}

fn domain<T>(msg: String) -> Result<T> {
    Err(Error::Domain(msg))
}

/// `log P{Poisson(x) >= j}` given `log x`.
fn ln_poisson_at_least(j: u32, ln_x: f64) -> Result<f64> {
    let x = ln_x.exp();
    let jf = j as f64;
    if x < 1e-3 {
        // x^j e^{-x}/j! · Σ_i x^i j!/(j+i)!
        let mut term = 1.0;
        let mut total = 1.0;
        for i in 1..40 {
            term *= x / (jf + i as f64);
            total += term;
            if term < 1e-18 * total {
                break;
            }
        }
        return Ok(jf * ln_x - x - ln_gamma(jf + 1.0) + total.ln());
    }
    if j == 1 {
        return Ok((-(-x).exp_m1()).ln());
    }
    ln_regularized_lower_gamma(jf, x)
}

/// `log P{Poisson(x) < j}` given `log x`.
fn ln_poisson_below(j: u32, ln_x: f64) -> Result<f64> {
    let x = ln_x.exp();
    if j == 1 {
        return Ok(-x);
    }
    if x < 1e-3 {
        return Ok(log1m_exp(ln_poisson_at_least(j, ln_x)?));
    }
    ln_regularized_upper_gamma(j as f64, x)
}

/// `log(1 − e^{−x})` given `x` and `log x`, accurate for tiny `x`.
fn ln_one_minus_exp_neg(x: f64, ln_x: f64) -> f64 {
    if x < 1e-5 {
        ln_x - x / 2.0 + x * x / 24.0
    } else {
        (-(-x).exp_m1()).ln()
    }
}

impl SequenceDescriptor {
    /// Validate `family` and build a descriptor.
    pub fn new(family: Family) -> Result<Self> {
        let mut out = SequenceDescriptor {
            family: family.clone(),
            monotone_from: 1,
            support: None,
            cache: Cache::None,
            inner: None,
            negated: None,
        };
        match family {
            Family::Polynomial { c, beta } => {
                if !(beta > 1.0 && beta.is_finite()) {
                    return domain(format!("polynomial family needs beta > 1, got {beta}"));
                }
                if !(c > 0.0 && c <= 1.0) {
                    return domain(format!("polynomial family needs 0 < c <= 1, got {c}"));
                }
            }
            Family::StretchedExp { c, beta } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    return domain(format!("stretched-exponential family needs beta > 0, got {beta}"));
                }
                if !(c > 0.0 && c <= std::f64::consts::E) {
                    return domain(format!("stretched-exponential family needs 0 < c <= e, got {c}"));
                }
            }
            Family::PoissonizedRange { t, ref weights, variant } => {
                if !(t > 0.0 && t.is_finite()) {
                    return domain(format!("Poissonized range needs t > 0, got {t}"));
                }
                weights.validate()?;
                let mut k0 = weights.monotone_from();
                match variant {
                    RangeVariant::AtLeast { j } | RangeVariant::Exactly { j } if j == 0 => {
                        return domain("occupancy threshold j must be at least 1".into());
                    }
                    RangeVariant::Exactly { j } => {
                        // x^j e^{-x} increases for x < j
                        let ln_j = (j as f64).ln();
                        let mut k = k0;
                        while t.ln() + weights.ln_weight(k) > ln_j {
                            k += 1;
                            if k > crate::numeric::max_terms() {
                                return domain("occupancy weights never fall below threshold".into());
                            }
                        }
                        k0 = k;
                    }
                    _ => {}
                }
                out.monotone_from = k0;
                out.support = weights.support();
            }
            Family::RecordsFAlpha { ref alpha } => {
                alpha.validate()?;
                match alpha {
                    Weights::Geometric { .. } => {}
                    Weights::List { values } => {
                        let mut prefix = vec![0.0];
                        let mut acc = CompensatedSum::new();
                        for &v in values {
                            acc.add(v);
                            prefix.push(acc.value());
                        }
                        let r: Vec<f64> = (1..=values.len()).map(|i| values[i - 1] / prefix[i]).collect();
                        out.monotone_from = monotone_index(&r);
                        out.support = Some(values.len());
                        out.cache = Cache::Prefix(prefix);
                    }
                    _ => {
                        return Err(Error::UnsupportedFamily(
                            "record weights must be geometric or an explicit list".into(),
                        ))
                    }
                }
            }
            Family::GnedinSinh { lambda } | Family::GnedinCosh { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return domain(format!("Gnedin families need lambda > 0, got {lambda}"));
                }
            }
            Family::GinibreGamma { t } => {
                if !(t > 0.0 && t.is_finite()) {
                    return domain(format!("Ginibre family needs t > 0, got {t}"));
                }
            }
            Family::ExplicitList { ref values } => {
                if values.is_empty() {
                    return domain("explicit list must be nonempty".into());
                }
                if let Some(v) = values.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
                    return domain(format!("explicit probabilities must lie in (0, 1], found {v}"));
                }
                out.monotone_from = monotone_index(values);
                out.support = Some(values.len());
            }
            Family::Perturbed { ref base, ref perturbation } => {
                let base = SequenceDescriptor::new((**base).clone())?;
                out.support = base.support;
                let mut k0 = base.monotone_from;
                match perturbation {
                    Perturbation::List { epsilons } => {
                        for (i, &e) in epsilons.iter().enumerate() {
                            let k = i + 1;
                            if base.support.is_some_and(|m| k > m) {
                                break;
                            }
                            let u = base.terms(k)?.prob() * (1.0 + e);
                            if !(u > 0.0 && u <= 1.0) || !e.is_finite() {
                                return Err(Error::InvalidPerturbation { k, value: u });
                            }
                        }
                        k0 = k0.max(epsilons.len() + 1);
                    }
                    Perturbation::Negated { sequence } => {
                        let neg = SequenceDescriptor::new((**sequence).clone())?;
                        out.negated = Some(Box::new(neg));
                    }
                    Perturbation::ExpSaturation => {}
                }
                out.inner = Some(Box::new(base));
                out.monotone_from = k0;
                if let Some(neg) = &out.negated {
                    // u_k = r_k (1 − v_k) must stay positive; scan the prefix
                    // where v_k can reach one and locate the monotone index.
                    let scan = out.support.unwrap_or(MONOTONE_SCAN).min(MONOTONE_SCAN);
                    let mut prev = f64::INFINITY;
                    let mut k0 = out.monotone_from;
                    for k in 1..=scan {
                        let v = neg.terms(k)?;
                        if v.ln_q == f64::NEG_INFINITY {
                            return Err(Error::InvalidPerturbation { k, value: 0.0 });
                        }
                        let u = out.terms(k)?.ln_r;
                        if u > prev && k > k0 {
                            k0 = k;
                        }
                        prev = u;
                    }
                    out.monotone_from = k0;
                }
            }
        }
        Ok(out)
    }

    /// Parse a descriptor from its JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let family: Family =
            serde_json::from_str(text).map_err(|e| Error::Domain(format!("bad sequence JSON: {e}")))?;
        SequenceDescriptor::new(family)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Index from which `r_k` is nonincreasing.
    pub fn monotone_from(&self) -> usize {
        self.monotone_from
    }

    /// Number of indicators for finite sequences; `None` when infinite.
    pub fn support(&self) -> Option<usize> {
        self.support
    }

    /// `r_k` for `k >= 1`. For very small probabilities this underflows to
    /// zero in double precision; use [`Self::terms`] for the log form.
    pub fn value(&self, k: usize) -> Result<f64> {
        Ok(self.terms(k)?.prob())
    }

    /// `log r_k` and `log(1 − r_k)` for `k >= 1`. Indices beyond a finite
    /// support give `r_k = 0`.
    pub fn terms(&self, k: usize) -> Result<TermLogs> {
        if k == 0 {
            return domain("sequence index must be at least 1".into());
        }
        if self.support.is_some_and(|m| k > m) {
            return Ok(TermLogs { ln_r: f64::NEG_INFINITY, ln_q: 0.0 });
        }
        let kf = k as f64;
        let t = match self.family {
            Family::Polynomial { c, beta } => {
                let ln_r = c.ln() - beta * kf.ln();
                TermLogs { ln_r, ln_q: (-ln_r.exp()).ln_1p() }
            }
            Family::StretchedExp { c, beta } => {
                let ln_r = c.ln() - kf.powf(beta);
                TermLogs { ln_r, ln_q: log1m_exp(ln_r.min(0.0)) }
            }
            Family::PoissonizedRange { t, ref weights, variant } => {
                let ln_x = t.ln() + weights.ln_weight(k);
                let x = ln_x.exp();
                match variant {
                    RangeVariant::AtLeast { j } => {
                        TermLogs { ln_r: ln_poisson_at_least(j, ln_x)?, ln_q: ln_poisson_below(j, ln_x)? }
                    }
                    RangeVariant::Exactly { j } => {
                        let jf = j as f64;
                        let ln_r = -x + jf * ln_x - ln_gamma(jf + 1.0);
                        TermLogs { ln_r, ln_q: log1m_exp(ln_r) }
                    }
                    RangeVariant::Even => {
                        // e^{-x}(cosh x − 1) = (1 − e^{-x})²/2
                        let ln_r = 2.0 * ln_one_minus_exp_neg(x, ln_x) - std::f64::consts::LN_2;
                        TermLogs { ln_r, ln_q: (-ln_r.exp()).ln_1p() }
                    }
                }
            }
            Family::RecordsFAlpha { ref alpha } => match (alpha, &self.cache) {
                (Weights::Geometric { ratio, .. }, _) => {
                    let lr = ratio.ln();
                    let ln_den = log1m_exp(kf * lr);
                    let ln_r = (kf - 1.0) * lr + (-ratio).ln_1p() - ln_den;
                    let ln_q = if k == 1 { f64::NEG_INFINITY } else { log1m_exp((kf - 1.0) * lr) - ln_den };
                    TermLogs { ln_r, ln_q }
                }
                (Weights::List { values }, Cache::Prefix(prefix)) => {
                    let ln_s = prefix[k].ln();
                    TermLogs { ln_r: values[k - 1].ln() - ln_s, ln_q: prefix[k - 1].ln() - ln_s }
                }
                _ => return Err(Error::UnsupportedFamily("record weights".into())),
            },
            Family::GnedinSinh { lambda } => {
                let ratio = (lambda / (PI * kf)).powi(2);
                TermLogs { ln_r: ratio.ln() - ratio.ln_1p(), ln_q: -ratio.ln_1p() }
            }
            Family::GnedinCosh { lambda } => {
                let ratio = (lambda / (PI * (kf - 0.5))).powi(2);
                TermLogs { ln_r: ratio.ln() - ratio.ln_1p(), ln_q: -ratio.ln_1p() }
            }
            Family::GinibreGamma { t } => TermLogs {
                ln_r: ln_regularized_lower_gamma(kf, t)?,
                ln_q: ln_regularized_upper_gamma(kf, t)?,
            },
            Family::ExplicitList { ref values } => {
                let r = values[k - 1];
                TermLogs { ln_r: r.ln(), ln_q: (-r).ln_1p() }
            }
            Family::Perturbed { ref perturbation, .. } => {
                let base = self.inner.as_ref().expect("perturbed descriptor has a base").terms(k)?;
                match perturbation {
                    Perturbation::List { epsilons } => {
                        let e = epsilons.get(k - 1).copied().unwrap_or(0.0);
                        let ln_r = base.ln_r + e.ln_1p();
                        TermLogs { ln_r, ln_q: (-ln_r.exp()).ln_1p() }
                    }
                    Perturbation::Negated { .. } => {
                        let v = self.negated.as_ref().expect("negated sequence present").terms(k)?;
                        let ln_r = base.ln_r + v.ln_q;
                        TermLogs { ln_r, ln_q: (-ln_r.exp()).ln_1p() }
                    }
                    Perturbation::ExpSaturation => {
                        let r = base.prob();
                        TermLogs { ln_r: ln_one_minus_exp_neg(r, base.ln_r), ln_q: -r }
                    }
                }
            }
        };
        Ok(t)
    }

    /// The perturbation `ε_k` of a perturbed descriptor (zero otherwise).
    pub fn epsilon(&self, k: usize) -> Result<f64> {
        match &self.family {
            Family::Perturbed { perturbation, .. } => {
                let base = self.inner.as_ref().expect("base").terms(k)?;
                Ok(match perturbation {
                    Perturbation::List { epsilons } => epsilons.get(k - 1).copied().unwrap_or(0.0),
                    Perturbation::Negated { .. } => -self.negated.as_ref().expect("negated").value(k)?,
                    Perturbation::ExpSaturation => {
                        let r = base.prob();
                        if r < 1e-3 {
                            // Σ_{j>=1} (−r)^j / (j+1)!, truncated below rounding level
                            r * (-1.0 / 2.0 + r * (1.0 / 6.0 + r * (-1.0 / 24.0 + r * (1.0 / 120.0 - r / 720.0))))
                        } else {
                            (-(-r).exp_m1() - r) / r
                        }
                    }
                })
            }
            _ => Ok(0.0),
        }
    }

    /// The sequence `v` of a `Negated` perturbation, where `ε_k = −v_k`.
    pub fn negated(&self) -> Option<&SequenceDescriptor> {
        self.negated.as_deref()
    }

    /// Log of an upper bound on `Σ_{k>K} |ε_k|`; `−∞` when unperturbed.
    pub fn ln_epsilon_tail_bound(&self, big_k: usize) -> Result<f64> {
        match &self.family {
            Family::Perturbed { perturbation, .. } => match perturbation {
                Perturbation::List { epsilons } => {
                    let acc: CompensatedSum = epsilons.iter().skip(big_k).map(|e| e.abs()).collect();
                    Ok((acc.value() * (1.0 + 1e-12)).ln())
                }
                Perturbation::Negated { .. } => self.negated.as_ref().expect("negated").ln_tail_bound(big_k),
                // |ε_k| <= r_k / 2
                Perturbation::ExpSaturation => {
                    Ok(self.inner.as_ref().expect("base").ln_tail_bound(big_k)? - std::f64::consts::LN_2)
                }
            },
            _ => Ok(f64::NEG_INFINITY),
        }
    }

    /// The unperturbed base of a perturbed descriptor.
    pub fn base(&self) -> Option<&SequenceDescriptor> {
        self.inner.as_deref()
    }

    /// Upper bound on `Σ_{k>K} r_k`.
    pub fn tail_sum_bound(&self, big_k: usize) -> Result<TailSumBound> {
        let ln_bound = self.ln_tail_bound(big_k)?;
        Ok(TailSumBound { k: big_k, bound: ln_bound.exp(), ln_bound })
    }

    /// Log of [`Self::tail_sum_bound`]; `−∞` for an empty tail.
    pub fn ln_tail_bound(&self, big_k: usize) -> Result<f64> {
        if let Some(m) = self.support {
            if big_k >= m {
                return Ok(f64::NEG_INFINITY);
            }
        }
        let kf = big_k as f64;
        let v = match self.family {
            Family::Polynomial { c, beta } => {
                if big_k == 0 {
                    (c * (1.0 + 1.0 / (beta - 1.0))).ln()
                } else {
                    c.ln() + (1.0 - beta) * kf.ln() - (beta - 1.0).ln()
                }
            }
            Family::StretchedExp { c, beta } => stretched_ln_tail(c, beta, big_k),
            Family::PoissonizedRange { t, ref weights, .. } => t.ln() + weights.ln_tail(big_k),
            Family::RecordsFAlpha { ref alpha } => match alpha {
                Weights::Geometric { ratio, .. } => {
                    if big_k == 0 {
                        // r_1 = 1 plus the bound from K = 1
                        let rest = self.ln_tail_bound(1)?.exp();
                        (1.0 + rest).ln()
                    } else {
                        // Σ_{i>K} α_i / S_K with S_K = s ρ (1 − ρ^K)/(1 − ρ)
                        kf * ratio.ln() - log1m_exp(kf * ratio.ln())
                    }
                }
                Weights::List { .. } => self.exact_finite_tail(big_k)?,
                _ => return Err(Error::UnsupportedFamily("record weights".into())),
            },
            Family::GnedinSinh { lambda } => {
                let v = (lambda / PI).powi(2);
                if big_k == 0 {
                    (self.value(1)? + v).ln()
                } else {
                    v.ln() - kf.ln()
                }
            }
            Family::GnedinCosh { lambda } => {
                let v = (lambda / PI).powi(2);
                if big_k == 0 {
                    (self.value(1)? + 2.0 * v).ln()
                } else {
                    (2.0 * v).ln() - (2.0 * kf - 1.0).ln()
                }
            }
            Family::GinibreGamma { t } => {
                // P{Pois(t) = K+1} / (1 − t/(K+2))² once K+2 > t; below that
                // point the terms up to it are added exactly so the bound
                // stays consistent with the partial sums
                let series = |k: f64| {
                    let ln_p = -t + (k + 1.0) * t.ln() - ln_gamma(k + 2.0);
                    ln_p - 2.0 * (1.0 - t / (k + 2.0)).ln()
                };
                let switch = ((t.floor() - 1.0).max(0.0)) as usize;
                if big_k >= switch {
                    series(kf)
                } else {
                    let mut acc = CompensatedSum::new();
                    for k in big_k + 1..=switch {
                        acc.add(self.value(k)?);
                    }
                    (acc.value() * (1.0 + 1e-12) + series(switch as f64).exp()).ln()
                }
            }
            Family::ExplicitList { .. } => self.exact_finite_tail(big_k)?,
            Family::Perturbed { ref perturbation, .. } => {
                let base = self.inner.as_ref().expect("base").ln_tail_bound(big_k)?;
                let scale = match perturbation {
                    Perturbation::List { epsilons } => {
                        epsilons.iter().fold(1.0f64, |m, &e| m.max(1.0 + e))
                    }
                    Perturbation::Negated { .. } | Perturbation::ExpSaturation => 1.0,
                };
                base + scale.ln()
            }
        };
        Ok(v)
    }

    fn exact_finite_tail(&self, big_k: usize) -> Result<f64> {
        let m = self.support.unwrap_or(big_k);
        let mut acc = CompensatedSum::new();
        for k in big_k + 1..=m {
            acc.add(self.value(k)?);
        }
        // round up so the closed sum stays an upper bound
        Ok((acc.value() * (1.0 + 1e-12)).ln())
    }

    fn odds_model(&self) -> Option<OddsModel> {
        match self.family {
            Family::Polynomial { c, beta } => Some(OddsModel::Power { c, beta }),
            Family::GnedinSinh { lambda } => Some(OddsModel::ShiftedSquare { v: (lambda / PI).powi(2), shift: 0.0 }),
            Family::GnedinCosh { lambda } => Some(OddsModel::ShiftedSquare { v: (lambda / PI).powi(2), shift: 0.5 }),
            _ => None,
        }
    }

    /// Whether [`Self::odds_tail`] is available.
    pub fn has_odds_tail(&self) -> bool {
        self.odds_model().is_some()
    }

    /// Smallest `K >= max(k₀, min_k)` with `ρ_{K+1} <= threshold`, for the
    /// power-law families.
    pub fn odds_tail_start(&self, threshold: f64, min_k: usize) -> Option<usize> {
        let model = self.odds_model()?;
        let need = match model {
            OddsModel::Power { c, beta } => (c * (1.0 + threshold) / threshold).powf(1.0 / beta),
            OddsModel::ShiftedSquare { v, shift } => (v / threshold).sqrt() + shift,
        };
        // need <= K + 1
        let k = (need.ceil() as usize).saturating_sub(1);
        Some(k.max(min_k).max(self.monotone_from))
    }

    /// Power sums of the odds beyond `start` for `m = 1..=orders`.
    /// Requires `ρ_{start+1} <= 1/2`.
    pub fn odds_tail(&self, start: usize, orders: usize) -> Result<Option<OddsTail>> {
        let Some(model) = self.odds_model() else { return Ok(None) };
        let q = (start + 1) as f64;
        match model {
            OddsModel::ShiftedSquare { v, shift } => {
                let base = q - shift;
                let rho_next = v / (base * base);
                if rho_next > 0.5 {
                    return domain(format!("odds tail start {start} too small"));
                }
                let mut scaled = Vec::with_capacity(orders);
                let mut errors = Vec::with_capacity(orders);
                for m in 1..=orders {
                    let (z, e) = hurwitz_scaled(2.0 * m as f64, base)?;
                    scaled.push(z);
                    errors.push(e);
                }
                Ok(Some(OddsTail { start, rho_next, scaled, errors }))
            }
            OddsModel::Power { c, beta } => {
                let y1 = c * q.powf(-beta);
                if y1 >= 1.0 / 3.0 {
                    return domain(format!("odds tail start {start} too small"));
                }
                let rho_next = y1 / (1.0 - y1);
                // Σ_{k>K} (y_k/(1−y_k))^m = Σ_{i>=m} C(i−1, m−1) c^i ζ(iβ, K+1)
                let mut zcache: Vec<(f64, f64)> = Vec::new();
                let mut zeta_at = |i: usize| -> Result<(f64, f64)> {
                    while zcache.len() < i {
                        let idx = zcache.len() + 1;
                        zcache.push(hurwitz_scaled(idx as f64 * beta, q)?);
                    }
                    Ok(zcache[i - 1])
                };
                let mut scaled = Vec::with_capacity(orders);
                let mut errors = Vec::with_capacity(orders);
                for m in 1..=orders {
                    let mut acc = CompensatedSum::new();
                    let mut err = 0.0;
                    let mut coef = 1.0; // C(i−1, m−1) y1^{i−m}
                    let mut i = m;
                    loop {
                        let (z, ze) = zeta_at(i)?;
                        acc.add(coef * z);
                        err += coef * ze;
                        let next = coef * (i as f64) / ((i + 1 - m) as f64) * y1;
                        if next < 1e-18 * acc.value() && i > m + 2 {
                            // remaining terms decrease at least geometrically with ratio < 1/2
                            err += 2.0 * next * zeta_at(m)?.0;
                            break;
                        }
                        coef = next;
                        i += 1;
                        if i > m + 4000 {
                            return Err(Error::Convergence("odds power-sum expansion".into()));
                        }
                    }
                    let factor = (1.0 - y1).powi(m as i32);
                    scaled.push(acc.value() * factor);
                    errors.push((err + 1e-15 * acc.value()) * factor);
                }
                Ok(Some(OddsTail { start, rho_next, scaled, errors }))
            }
        }
    }
}

/// Build `u_k = r_k (1 + ε_k)` from `base`.
pub fn perturb(base: &SequenceDescriptor, perturbation: Perturbation) -> Result<SequenceDescriptor> {
    SequenceDescriptor::new(Family::Perturbed { base: Box::new(base.family.clone()), perturbation })
}
