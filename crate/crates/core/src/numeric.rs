//! Small numerical building blocks shared by the other modules: compensated
//! summation, log-domain arithmetic and the configurable term cap.

use std::sync::OnceLock;

/// Default cap on the number of series terms any single evaluation may use.
pub const DEFAULT_MAX_TERMS: usize = 10_000_000;

/// Environment variable that overrides [`DEFAULT_MAX_TERMS`].
pub const MAX_TERMS_ENV: &str = "TAILFORGE_MAX_TERMS";

/// Term cap in effect for this process.
pub fn max_terms() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(MAX_TERMS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_TERMS)
    })
}

/// A numeric result with a bound on the error committed by truncating an
/// infinite series: the exact value lies in `value ± error_bound`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundedValue {
    pub value: f64,
    pub error_bound: f64,
    pub terms_used: usize,
}

impl BoundedValue {
    pub fn new(value: f64, error_bound: f64, terms_used: usize) -> Self {
        Self { value, error_bound, terms_used }
    }

    /// Whether `x` lies in the certified interval widened by `slack`.
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        (x - self.value).abs() <= self.error_bound + slack
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<CompensatedSum>().value()
}

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum(exp(x)))` with running-max renormalisation.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    let s: CompensatedSum = xs.iter().map(|&x| (x - m).exp()).collect();
    m + s.value().ln()
}

/// Logistic function `1 / (1 + exp(-z))`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))`.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `log(1 - exp(x))` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Binomial coefficient `C(x, k)` for real `x` and integer `k >= 0`.
pub fn binomial(x: f64, k: usize) -> f64 {
    let mut out = 1.0;
    for i in 0..k {
        out *= (x - i as f64) / (i as f64 + 1.0);
    }
    out
}
