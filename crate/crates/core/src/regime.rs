//! Finite-`n` evidence for the three asymptotic regimes, and the limit data
//! of the bounded-variance regime.
//!
//! The regimes are separated by the behaviour of `ψ''(s_n)`: growing without
//! bound (B), vanishing (A), or converging to a positive constant (C). In
//! regime C the constant `c₀ = P{Σ θ_m = 0}` enters the tail estimate.

use crate::cgf::{head_sum, log_tail_series, psi_double_prime, raw_tail_sum, tail_sum, SeriesKind};
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, BoundedValue};
use crate::saddle::{default_residual_tol, solve};
use crate::sequences::SequenceDescriptor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Regime label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    /// `ψ''(s_n) → ∞`.
    B,
    /// `ψ''(s_n) → 0`.
    A,
    /// `ψ''(s_n)` tends to a positive constant.
    C,
    Undetermined,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeLabel::A => "A",
            RegimeLabel::B => "B",
            RegimeLabel::C => "C",
            RegimeLabel::Undetermined => "undetermined",
        };
        f.write_str(s)
    }
}

/// Decision thresholds of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `ψ''` below this at the last grid point supports regime A.
    pub lo: f64,
    /// `ψ''` above this at the last grid point supports regime B.
    pub hi: f64,
    /// Largest relative variation over the second half of the grid for regime C.
    pub flatness: f64,
    /// Number of regime-C limits `p_k`, `q_k` to report.
    pub k_max: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { lo: 0.1, hi: 10.0, flatness: 0.1, k_max: 30 }
    }
}

/// Diagnostic sums at one saddle point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: u64,
    pub s: f64,
    /// `ψ''(s_n)`.
    pub psi2: BoundedValue,
    /// `log ψ''(s_n)`, finite where `ψ''` underflows.
    pub ln_psi2: f64,
    /// `Σ_{k<=n} (1 − r_k)/(r_k e^{s_n} + 1 − r_k)`.
    pub head_sum: f64,
    /// `Σ_{k>n} r_k e^{s_n}/(r_k e^{s_n} + 1 − r_k)`.
    pub tail_sum: BoundedValue,
    /// `Σ_{k<=n} r_k^{-1} e^{-s_n}`.
    pub head_majorant: f64,
    /// `Σ_{k>n} r_k e^{s_n}`.
    pub tail_majorant: f64,
    /// Logarithms of the two majorants.
    pub ln_head_majorant: f64,
    pub ln_tail_majorant: f64,
}

/// Compute [`Diagnostics`] at the numeric saddle for level `n`.
pub fn diagnostics(seq: &SequenceDescriptor, n: u64) -> Result<Diagnostics> {
    let sol = solve(seq, n, default_residual_tol(n))?;
    let s = sol.s;
    let nn = n as usize;
    let psi2 = psi_double_prime(seq, s, 1e-12)?;
    let head = head_sum(seq, s, nn)?;
    let tail = tail_sum(seq, s, nn, 1e-13)?;
    let mut ln_hm = f64::NEG_INFINITY;
    for k in 1..=nn {
        ln_hm = log_add_exp(ln_hm, -seq.terms(k)?.ln_r - s);
    }
    let raw = raw_tail_sum(seq, nn, 1e-10)?;
    let ln_raw = if raw.value < 1e-250 && !seq.has_odds_tail() {
        log_tail_series(seq, 0.0, nn, &[SeriesKind::Raw])?[0]
    } else {
        raw.value.ln()
    };
    let ln_tm = ln_raw + s;
    Ok(Diagnostics {
        n,
        s,
        psi2,
        ln_psi2: sol.ln_psi_double_prime,
        head_sum: head,
        tail_sum: tail,
        head_majorant: ln_hm.exp(),
        tail_majorant: ln_tm.exp(),
        ln_head_majorant: ln_hm,
        ln_tail_majorant: ln_tm,
    })
}

/// Distribution of one `θ_m` on `{−1, 0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaDist {
    pub minus: f64,
    pub zero: f64,
    pub plus: f64,
}

impl ThetaDist {
    /// `θ_0`, supported on `{−1, 0}`.
    pub fn initial(q0: f64) -> Self {
        Self { minus: q0 / (1.0 + q0), zero: 1.0 / (1.0 + q0), plus: 0.0 }
    }

    /// `θ_m` for `m >= 1`.
    pub fn step(p: f64, q: f64) -> Self {
        let d = (1.0 + p) * (1.0 + q);
        Self { minus: q / d, zero: (1.0 + p * q) / d, plus: p / d }
    }

    pub fn nonzero(&self) -> f64 {
        self.minus + self.plus
    }
}

/// Limits `p_k = lim r_{n+k} e^{s_n}` (`k >= 1`) and `q_k = lim r_{n−k}^{-1} e^{-s_n}`
/// (`k >= 0`) as seen at the largest grid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCData {
    /// `p[0]` is `p_1`.
    pub p: Vec<f64>,
    /// `q[0]` is `q_0`.
    pub q: Vec<f64>,
    /// Relative change of each limit between the last two grid levels.
    pub p_drift: Vec<f64>,
    pub q_drift: Vec<f64>,
    pub c0: Option<BoundedValue>,
    /// `θ_0, θ_1, …`.
    pub theta: Vec<ThetaDist>,
}

/// One grid row of a [`RegimeReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: u64,
    pub s: f64,
    pub psi2: f64,
    pub ln_psi2: f64,
    pub head_sum: f64,
    pub tail_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    pub grid: Vec<GridPoint>,
    pub c_data: Option<RegimeCData>,
}

fn limits_at(seq: &SequenceDescriptor, n: u64, s: f64, k_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = n as usize;
    let mut p = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        p.push((seq.terms(nn + k)?.ln_r + s).exp());
    }
    let mut q = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k >= nn {
            q.push(0.0);
        } else {
            q.push((-seq.terms(nn - k)?.ln_r - s).exp());
        }
    }
    Ok((p, q))
}

fn rel_change(new: f64, old: f64) -> f64 {
    if new == old {
        0.0
    } else {
        (new - old).abs() / new.abs().max(old.abs())
    }
}

/// Read off the regime-C limits at the largest level of `n_grid` and the
/// drift relative to the previous level.
pub fn regime_c_limits(seq: &SequenceDescriptor, n_grid: &[u64], k_max: usize) -> Result<RegimeCData> {
    if seq.support().is_some() {
        return Err(Error::NotRegimeC("finite support: the tail sums vanish".into()));
    }
    if n_grid.len() < 2 || k_max == 0 {
        return Err(Error::Domain("need at least two grid levels and k_max >= 1".into()));
    }
    let last = n_grid[n_grid.len() - 1];
    let prev = n_grid[n_grid.len() - 2];
    let s_last = solve(seq, last, default_residual_tol(last))?.s;
    let s_prev = solve(seq, prev, default_residual_tol(prev))?.s;
    let (p, q) = limits_at(seq, last, s_last, k_max)?;
    let (pp, qp) = limits_at(seq, prev, s_prev, k_max)?;
    let p_drift: Vec<f64> = p.iter().zip(&pp).map(|(a, b)| rel_change(*a, *b)).collect();
    let q_drift: Vec<f64> = q.iter().zip(&qp).map(|(a, b)| rel_change(*a, *b)).collect();
    if p_drift[0] > 0.1 || q_drift[0] > 0.1 {
        return Err(Error::NotRegimeC(format!(
            "limits drift between levels {prev} and {last}: p_1 by {:.3}, q_0 by {:.3}",
            p_drift[0], q_drift[0]
        )));
    }
    let theta = theta_dists(&p, &q);
    Ok(RegimeCData { p, q, p_drift, q_drift, c0: None, theta })
}

fn theta_dists(p: &[f64], q: &[f64]) -> Vec<ThetaDist> {
    let mut out = vec![ThetaDist::initial(q[0])];
    let m = p.len().max(q.len().saturating_sub(1));
    for i in 1..=m {
        out.push(ThetaDist::step(p.get(i - 1).copied().unwrap_or(0.0), q.get(i).copied().unwrap_or(0.0)));
    }
    out
}

/// The limit sequences fed to [`c0`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThetaLimits {
    /// `p_1, p_2, …` and `q_0, q_1, …`, zero beyond the listed entries.
    Explicit { p: Vec<f64>, q: Vec<f64> },
    /// `p_k = p1 · ratio^{k−1}` and `q_k = q0 · ratio^k`.
    Geometric { p1: f64, q0: f64, ratio: f64 },
}

impl ThetaLimits {
    fn p1_q0(&self) -> (f64, f64) {
        match self {
            ThetaLimits::Explicit { p, q } => (p.first().copied().unwrap_or(0.0), q.first().copied().unwrap_or(0.0)),
            ThetaLimits::Geometric { p1, q0, .. } => (*p1, *q0),
        }
    }

    fn p(&self, k: usize) -> f64 {
        match self {
            ThetaLimits::Explicit { p, .. } => p.get(k - 1).copied().unwrap_or(0.0),
            ThetaLimits::Geometric { p1, ratio, .. } => p1 * ratio.powi(k as i32 - 1),
        }
    }

    fn q(&self, k: usize) -> f64 {
        match self {
            ThetaLimits::Explicit { q, .. } => q.get(k).copied().unwrap_or(0.0),
            ThetaLimits::Geometric { q0, ratio, .. } => q0 * ratio.powi(k as i32),
        }
    }

    /// Upper bound on `Σ_{m>M} P{θ_m ≠ 0} <= Σ_{m>M} (p_m + q_m)`.
    fn tail_mass(&self, m: usize) -> f64 {
        match self {
            ThetaLimits::Explicit { p, q } => {
                p.iter().skip(m).sum::<f64>() + q.iter().skip(m + 1).sum::<f64>()
            }
            ThetaLimits::Geometric { p1, q0, ratio } => {
                (p1 * ratio.powi(m as i32) + q0 * ratio.powi(m as i32 + 1)) / (1.0 - ratio)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (p1, q0) = self.p1_q0();
        if !(p1 > 0.0 && q0 > 0.0) {
            return Err(Error::Degenerate(format!("need p_1 > 0 and q_0 > 0, got {p1} and {q0}")));
        }
        match self {
            ThetaLimits::Explicit { p, q } => {
                if p.iter().chain(q).any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return Err(Error::Domain("limits must be finite and nonnegative".into()));
                }
            }
            ThetaLimits::Geometric { ratio, .. } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::Domain(format!("geometric limits need 0 < ratio < 1, got {ratio}")));
                }
            }
        }
        Ok(())
    }
}

/// `c₀ = P{Σ_{m>=0} θ_m = 0}` by exact convolution of `θ_0, …, θ_M` on
/// `[−(M+1), M]`, with `M` chosen so the neglected variables are nonzero
/// with total probability at most `tol`.
pub fn c0(limits: &ThetaLimits, tol: f64) -> Result<BoundedValue> {
    limits.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut m = 0;
    while limits.tail_mass(m) > tol {
        m += 1;
        if m > 100_000 {
            return Err(Error::Convergence("θ limits decay too slowly".into()));
        }
    }
    let dropped = limits.tail_mass(m);
    // index i represents the value i − (M+1)
    let offset = m + 1;
    let mut dist = vec![0.0f64; 2 * m + 2];
    let t0 = ThetaDist::initial(limits.q(0));
    dist[offset] = t0.zero;
    dist[offset - 1] = t0.minus;
    for j in 1..=m {
        let t = ThetaDist::step(limits.p(j), limits.q(j));
        let mut next = vec![0.0f64; dist.len()];
        for (i, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            next[i] += w * t.zero;
            if i > 0 {
                next[i - 1] += w * t.minus;
            }
            if i + 1 < next.len() {
                next[i + 1] += w * t.plus;
            }
        }
        dist = next;
    }
    Ok(BoundedValue::new(dist[offset], dropped + 1e-15, m + 1))
}

/// `(1/(1+q_0)) Π_{m>=1} (1 + p_m q_m)/((1 + p_m)(1 + q_m))`, the probability
/// that every `θ_m` vanishes, which bounds `c₀` from below.
pub fn c0_lower_bound(limits: &ThetaLimits, terms: usize) -> f64 {
    let mut log = -limits.q(0).ln_1p();
    for j in 1..=terms {
        let (p, q) = (limits.p(j), limits.q(j));
        log += (p * q).ln_1p() - p.ln_1p() - q.ln_1p();
    }
    log.exp()
}

/// Classify the regime from `ψ''(s_n)` along an increasing level grid.
pub fn classify(seq: &SequenceDescriptor, n_grid: &[u64], thresholds: &Thresholds) -> Result<RegimeReport> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("level grid must be increasing with at least three points".into()));
    }
    let diags: Vec<Diagnostics> =
        n_grid.par_iter().map(|&n| diagnostics(seq, n)).collect::<Result<Vec<_>>>()?;
    let grid: Vec<GridPoint> = diags
        .iter()
        .map(|d| GridPoint {
            n: d.n,
            s: d.s,
            psi2: d.psi2.value,
            ln_psi2: d.ln_psi2,
            head_sum: d.head_sum,
            tail_sum: d.tail_sum.value,
        })
        .collect();
    // trends are read on log ψ'', which stays ordered after ψ'' underflows
    let logs: Vec<f64> = grid.iter().map(|g| g.ln_psi2).collect();
    let ln_last = *logs.last().expect("nonempty grid");
    let last = ln_last.exp();
    let increasing = logs.windows(2).all(|w| w[1] > w[0]);
    let decreasing = logs.windows(2).all(|w| w[1] < w[0]);
    let v: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
    let half = &v[v.len() / 2..];
    let (mn, mx) = half.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mean = half.iter().sum::<f64>() / half.len() as f64;
    let flat = (mx - mn) / mean <= thresholds.flatness;

    let mut label = if increasing && ln_last > thresholds.hi.ln() {
        RegimeLabel::B
    } else if decreasing && ln_last < thresholds.lo.ln() {
        RegimeLabel::A
    } else if flat && last > thresholds.lo && last < thresholds.hi {
        RegimeLabel::C
    } else {
        RegimeLabel::Undetermined
    };

    let mut c_data = None;
    if label == RegimeLabel::C {
        match regime_c_limits(seq, n_grid, thresholds.k_max) {
            Ok(mut data) => {
                let limits = ThetaLimits::Explicit { p: data.p.clone(), q: data.q.clone() };
                data.c0 = Some(c0(&limits, 1e-12)?);
                c_data = Some(data);
            }
            Err(Error::NotRegimeC(_)) => label = RegimeLabel::Undetermined,
            Err(e) => return Err(e),
        }
    }
    Ok(RegimeReport { label, grid, c_data })
}
