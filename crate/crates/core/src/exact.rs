//! Reference distributions: the exact law of `Y` by log-domain convolution,
//! the Poissonization bound, and the tilted Monte-Carlo estimator.
//!
//! For the power-law families the count of successes beyond the convolution
//! index `K` is not dropped but folded in exactly: its generating function
//! `Π_{k>K}(1 + ρ_k z)/(1 + ρ_k)` is `exp(G(z) − G(1))` with
//! `G(z) = Σ_m (−1)^{m+1} R_m z^m/m`, where `R_m` are the odds power sums.

use crate::cgf::{psi, tail_series, SeriesKind};
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp, max_terms};
use crate::saddle::{default_residual_tol, solve};
use crate::sequences::SequenceDescriptor;
use crate::specfun::{ln_gamma, ln_regularized_lower_gamma};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Log-probability table of `Y` on `0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPmf {
    /// `log P{Y = j}` for `j = 0..=n_max`.
    pub log_p: Vec<f64>,
    /// Number of indicators convolved exactly.
    pub k_used: usize,
    /// Largest change of any `log_p[j]` in the last doubling of `k_used`.
    pub stabilization_delta: f64,
    /// Upper bound on the mass that truncation could move: `Σ_{k>K} r_k`, or
    /// `Σ_{k>K} r_k |ε_k|` when a perturbed tail is replaced by its base.
    pub tail_drop_bound: f64,
    /// Whether the indicators beyond `k_used` were folded in through an odds
    /// model, exactly or via the unperturbed base.
    pub tail_corrected: bool,
    /// Requested relative tolerance.
    pub rel_tol: f64,
    /// Log of an upper bound on `P{Y > n_max}`.
    pub log_beyond: f64,
}

impl LogPmf {
    pub fn n_max(&self) -> usize {
        self.log_p.len() - 1
    }

    /// Rows `(n, log_p)` as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,log_p\n");
        for (j, v) in self.log_p.iter().enumerate() {
            out.push_str(&format!("{j},{v:.16e}\n"));
        }
        out
    }
}

/// Upper tail `log P{Y >= n}` read from a [`LogPmf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCcdf {
    pub n: usize,
    /// `log Σ_{j=n}^{n_max} P{Y = j}`.
    pub log_value: f64,
    /// Upper bound on the omitted mass `P{Y > n_max}`.
    pub correction: f64,
}

/// Log-domain Bernoulli convolution state over `0..=n_max`.
struct Convolution {
    table: Vec<f64>,
    k: usize,
}

impl Convolution {
    fn new(n_max: usize) -> Self {
        let mut table = vec![f64::NEG_INFINITY; n_max + 1];
        table[0] = 0.0;
        Self { table, k: 0 }
    }

    fn extend_to(&mut self, seq: &SequenceDescriptor, big_k: usize) -> Result<()> {
        while self.k < big_k {
            self.k += 1;
            let t = seq.terms(self.k)?;
            for j in (0..self.table.len()).rev() {
                let stay = self.table[j] + t.ln_q;
                let step = if j > 0 { self.table[j - 1] + t.ln_r } else { f64::NEG_INFINITY };
                self.table[j] = log_add_exp(stay, step);
            }
        }
        Ok(())
    }
}

/// `log P{T = j}`, `j = 0..=j_max`, for the number `T` of successes among
/// indicators `k > start` under tilt `s`. Requires `e^s ρ_{start+1} <= 1/2`;
/// `None` if the family has no odds model.
pub fn tail_count_log_pmf(seq: &SequenceDescriptor, start: usize, s: f64, j_max: usize) -> Result<Option<Vec<f64>>> {
    if !seq.has_odds_tail() {
        return Ok(None);
    }
    let orders = j_max.max(80);
    let tail = seq.odds_tail(start, orders)?.expect("odds model present");
    let next = seq.terms(start + 1)?;
    let ln_x = next.ln_r - next.ln_q + s;
    let x = ln_x.exp();
    if x > 0.5 {
        return Err(Error::Domain(format!("tilted odds {x} beyond index {start} exceed 1/2")));
    }
    // G(1) = Σ_m (−1)^{m+1} x^m R̃_m / m
    let mut g1 = 0.0;
    let mut xm = 1.0;
    for m in 1..=orders {
        xm *= x;
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        g1 += sign * xm * tail.scaled[m - 1] / m as f64;
    }
    let ln_r1 = tail.scaled[0].ln();
    // f_j = Σ_m (−1)^{m+1} (R̃_m/R̃_1^m) (j−1)!/(j−m)! f_{j−m}, f_0 = 1,
    // and P{T = j} = f_j (x R̃_1)^j / j! · e^{−G(1)}
    let mut f = vec![1.0f64; j_max + 1];
    for j in 1..=j_max {
        let mut acc = 0.0;
        let mut ln_w = 0.0; // log((j−1)!/(j−m)!)
        for m in 1..=j {
            if m > 1 {
                ln_w += ((j - m + 1) as f64).ln();
            }
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            let ln_ratio = tail.scaled[m - 1].ln() - m as f64 * ln_r1;
            acc += sign * (ln_ratio + ln_w).exp() * f[j - m];
        }
        f[j] = acc;
    }
    let out = (0..=j_max)
        .map(|j| {
            if f[j] <= 0.0 {
                f64::NEG_INFINITY
            } else {
                f[j].ln() + j as f64 * (ln_x + ln_r1) - ln_gamma(j as f64 + 1.0) - g1
            }
        })
        .collect();
    Ok(Some(out))
}

fn convolve_log(a: &[f64], b: &[f64], n_max: usize) -> Vec<f64> {
    (0..=n_max)
        .map(|j| {
            let cells: Vec<f64> = (0..=j).filter(|&i| i < a.len() && j - i < b.len()).map(|i| a[i] + b[j - i]).collect();
            log_sum_exp(&cells)
        })
        .collect()
}

fn max_log_delta(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}

/// Exact law of `Y` on `0..=n_max` to relative accuracy `rel_tol`.
pub fn exact_pmf(seq: &SequenceDescriptor, n_max: usize, rel_tol: f64) -> Result<LogPmf> {
    if !(rel_tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {rel_tol}")));
    }
    let cap = max_terms();
    let mut conv = Convolution::new(n_max);

    if let Some(m) = seq.support() {
        conv.extend_to(seq, m)?;
        let log_beyond = beyond_bound(seq, n_max)?;
        return Ok(LogPmf {
            log_p: conv.table,
            k_used: m,
            stabilization_delta: 0.0,
            tail_drop_bound: 0.0,
            tail_corrected: false,
            rel_tol,
            log_beyond,
        });
    }

    // a perturbed power law borrows the tail law of its base; the two laws
    // differ in total variation by at most Σ_{k>K} r_k |ε_k|
    let (model, perturbed) = if seq.has_odds_tail() {
        (Some(seq), false)
    } else {
        match seq.base() {
            Some(b) if b.has_odds_tail() => (Some(b), true),
            _ => (None, false),
        }
    };
    let model_start = model.and_then(|m| m.odds_tail_start(0.5, 0)).unwrap_or(0);
    let mut big_k = (2 * n_max).max(seq.monotone_from()).max(model_start).max(1);
    let snapshot = |conv: &Convolution, big_k: usize| -> Result<Vec<f64>> {
        match model {
            Some(m) => {
                let tail = tail_count_log_pmf(m, big_k, 0.0, n_max)?.expect("odds model");
                Ok(convolve_log(&conv.table, &tail, n_max))
            }
            None => Ok(conv.table.clone()),
        }
    };
    let drop_bound = |big_k: usize| -> Result<f64> {
        if perturbed {
            let base = model.expect("base");
            Ok(base.value(big_k + 1)? * seq.ln_epsilon_tail_bound(big_k)?.exp())
        } else {
            Ok(seq.tail_sum_bound(big_k)?.bound)
        }
    };
    conv.extend_to(seq, big_k)?;
    let mut prev = snapshot(&conv, big_k)?;
    loop {
        let next_k = 2 * big_k;
        if next_k > cap {
            return Err(Error::Truncation { terms: big_k, best_bound: seq.tail_sum_bound(big_k)?.bound });
        }
        conv.extend_to(seq, next_k)?;
        let cur = snapshot(&conv, next_k)?;
        let delta = max_log_delta(&prev, &cur);
        big_k = next_k;
        if delta <= rel_tol {
            return Ok(LogPmf {
                log_p: cur,
                k_used: big_k,
                stabilization_delta: delta,
                tail_drop_bound: drop_bound(big_k)?,
                tail_corrected: model.is_some(),
                rel_tol,
                log_beyond: beyond_bound(seq, n_max)?,
            });
        }
        prev = cur;
    }
}

/// Log of an upper bound on `P{Y > n_max}`: the smaller of the
/// Poissonization bound and the Chernoff bound `exp(ψ(s) − s m)` at the
/// saddle of `m = n_max + 1`.
fn beyond_bound(seq: &SequenceDescriptor, n_max: usize) -> Result<f64> {
    let m = n_max as u64 + 1;
    if seq.support().is_some_and(|sup| n_max >= sup) {
        return Ok(f64::NEG_INFINITY);
    }
    let poisson = poissonization_bound(seq, m)?;
    let chernoff = match solve(seq, m, default_residual_tol(m)) {
        Ok(sol) => {
            let p = psi(seq, sol.s, 1e-12)?;
            p.value + p.error_bound - sol.s * m as f64
        }
        Err(_) => 0.0,
    };
    Ok(poisson.min(chernoff).min(0.0))
}

/// `log P{Y >= n}` from the table, with the omitted upper mass as correction.
pub fn exact_ccdf(pmf: &LogPmf, n: usize) -> Result<LogCcdf> {
    if n > pmf.n_max() {
        return Err(Error::Domain(format!("level {n} exceeds table size {}", pmf.n_max())));
    }
    let log_value = log_sum_exp(&pmf.log_p[n..]);
    let correction = pmf.log_beyond.exp();
    if correction > pmf.rel_tol * log_value.exp() {
        return Err(Error::TableTooShort { n, correction, value: log_value.exp() });
    }
    Ok(LogCcdf { n, log_value, correction })
}

/// `log P{Poisson(t₀) >= n}` with `t₀ = Σ |log(1 − r_k)|`, an upper bound on
/// `log P{Y >= n}`. Returns `0` when some `r_k = 1`.
pub fn poissonization_bound(seq: &SequenceDescriptor, n: u64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let t0 = tail_series(seq, 0.0, 1e-12, 0, &[SeriesKind::NegLogComplement])?[0];
    let t_up = t0.value + t0.error_bound;
    if !t_up.is_finite() {
        return Ok(0.0);
    }
    // relative allowance for rounding in the gamma evaluation; at n = 1 the
    // bound is attained exactly
    Ok((ln_regularized_lower_gamma(n as f64, t_up)? + POISSON_ROUNDING).min(0.0))
}

const POISSON_ROUNDING: f64 = 1e-11;

/// Importance-sampling estimate of `log P{Y = n}` under the tilt `s_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: u64,
    pub s: f64,
    pub log_point_estimate: f64,
    /// Delta-method standard error of `log_point_estimate`.
    pub std_error_log: f64,
    pub samples: u64,
    pub seed: u64,
    pub hits: u64,
    pub zero_hits: bool,
    /// Sample mean of `Y` under the tilt; close to `n`.
    pub tilted_mean: f64,
    /// Indicators sampled one by one; the rest are drawn as a single count.
    pub k_sampled: usize,
}

const BLOCK: u64 = 4096;
const TAIL_STREAM: u64 = u64::MAX;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draw `samples` copies of `Y` under `P^{(s_n)}`.
///
/// Indicator `k` of sample `i` always consumes word `2i` of ChaCha stream
/// `k`, so results do not depend on block scheduling or on where the
/// sampled range ends.
pub fn mc_tilted(seq: &SequenceDescriptor, n: u64, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples < 1000 {
        return Err(Error::Domain(format!("need at least 1000 samples, got {samples}")));
    }
    let sol = solve(seq, n, default_residual_tol(n))?;
    let s = sol.s;
    let cap = max_terms();

    let (k_sampled, tail_cdf) = match seq.support() {
        Some(m) => (m, None),
        None if seq.has_odds_tail() => {
            let start = seq.odds_tail_start(0.5 * (-s.max(0.0)).exp(), 0).expect("odds model");
            let mean_guess = sol.psi_prime + 10.0 * sol.psi_double_prime.sqrt() + 50.0;
            let j_max = (4.0 * mean_guess) as usize;
            let pmf = tail_count_log_pmf(seq, start, s, j_max)?.expect("odds model");
            let mut cdf = Vec::with_capacity(pmf.len());
            let mut acc = 0.0;
            for v in pmf {
                acc += v.exp();
                cdf.push(acc);
            }
            (start, Some(cdf))
        }
        None => {
            let limit = (1e-3 / samples as f64).ln();
            let mut k = seq.monotone_from().max(n as usize);
            while seq.ln_tail_bound(k)? + s.max(0.0) > limit {
                k += 1 + k / 16;
                if k > cap {
                    return Err(Error::Truncation { terms: cap, best_bound: (seq.ln_tail_bound(k)? + s).exp() });
                }
            }
            (k, None)
        }
    };
    if k_sampled > cap {
        return Err(Error::Truncation { terms: cap, best_bound: f64::INFINITY });
    }
    let probs: Vec<f64> = (1..=k_sampled)
        .map(|k| crate::cgf::tilted_prob(seq, s, k))
        .collect::<Result<_>>()?;

    let blocks: Vec<u64> = (0..samples.div_ceil(BLOCK)).collect();
    let per_block: Vec<(u64, f64)> = blocks
        .par_iter()
        .map(|&b| {
            let i0 = b * BLOCK;
            let len = (samples - i0).min(BLOCK) as usize;
            let mut counts = vec![0u64; len];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (idx, &p) in probs.iter().enumerate() {
                rng.set_stream(idx as u64 + 1);
                rng.set_word_pos(2 * i0 as u128);
                for c in counts.iter_mut() {
                    if uniform(&mut rng) < p {
                        *c += 1;
                    }
                }
            }
            if let Some(cdf) = &tail_cdf {
                rng.set_stream(TAIL_STREAM);
                rng.set_word_pos(2 * i0 as u128);
                for c in counts.iter_mut() {
                    let u = uniform(&mut rng);
                    let j = cdf.partition_point(|&v| v <= u);
                    *c += j as u64;
                }
            }
            let hits = counts.iter().filter(|&&c| c == n).count() as u64;
            let total: f64 = counts.iter().map(|&c| c as f64).sum();
            (hits, total)
        })
        .collect();
    let hits: u64 = per_block.iter().map(|h| h.0).sum();
    let total: f64 = per_block.iter().map(|h| h.1).sum();
    let freq = hits as f64 / samples as f64;
    let base = sol.psi - s * n as f64;
    let (log_point_estimate, std_error_log) = if hits == 0 {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        (base + freq.ln(), ((1.0 - freq) / (freq * samples as f64)).sqrt())
    };
    Ok(McEstimate {
        n,
        s,
        log_point_estimate,
        std_error_log,
        samples,
        seed,
        hits,
        zero_hits: hits == 0,
        tilted_mean: total / samples as f64,
        k_sampled,
    })
}

/// `log P{Z = n}` for the sinh family: `λ^{2n+1}/((2n+1)! sinh λ)`.
pub fn gnedin_sinh_log_pmf(lambda: f64, n: u64) -> f64 {
    let m = 2.0 * n as f64 + 1.0;
    m * lambda.ln() - ln_gamma(m + 1.0) - lambda.sinh().ln()
}

/// `log P{ϑ = n}` for the cosh family: `λ^{2n}/((2n)! cosh λ)`.
pub fn gnedin_cosh_log_pmf(lambda: f64, n: u64) -> f64 {
    let m = 2.0 * n as f64;
    m * lambda.ln() - ln_gamma(m + 1.0) - lambda.cosh().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::Family;

    #[test]
    fn three_halves() {
        let seq = SequenceDescriptor::new(Family::ExplicitList { values: vec![0.5; 3] }).unwrap();
        let pmf = exact_pmf(&seq, 3, 1e-12).unwrap();
        let want = [0.125, 0.375, 0.375, 0.125];
        for j in 0..4 {
            assert!((pmf.log_p[j] - f64::ln(want[j])).abs() < 1e-14);
        }
        let c = exact_ccdf(&pmf, 2).unwrap();
        assert!((c.log_value - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn gnedin_heads() {
        let s = SequenceDescriptor::new(Family::GnedinSinh { lambda: 1.0 }).unwrap();
        let pmf = exact_pmf(&s, 5, 1e-10).unwrap();
        assert!((pmf.log_p[0] + 1f64.sinh().ln()).abs() < 1e-9);
        let c = SequenceDescriptor::new(Family::GnedinCosh { lambda: 1.0 }).unwrap();
        let pmf = exact_pmf(&c, 5, 1e-10).unwrap();
        assert!((pmf.log_p[1] - (0.5 / 1f64.cosh()).ln()).abs() < 1e-9);
    }

    #[test]
    fn tail_count_is_a_distribution() {
        let g = SequenceDescriptor::new(Family::GnedinSinh { lambda: 2.0 }).unwrap();
        let t = tail_count_log_pmf(&g, 10, 0.0, 40).unwrap().unwrap();
        let total: f64 = t.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
