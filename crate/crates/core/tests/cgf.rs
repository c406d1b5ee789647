mod common;

use common::{families, seq};
use proptest::prelude::*;
use std::f64::consts::PI;
use tailforge::cgf::{
    core_identity_gap, evaluate, head_sum, psi, psi_double_prime, psi_prime, raw_tail_sum, tail_sum, tilted_prob,
    TiltedSequence, DEFAULT_TOL,
};
use tailforge::saddle::{default_residual_tol, min_level, solve};
use tailforge::sequences::{Family, SequenceDescriptor};
use tailforge::Error;

/// `Σ_{k>=1} 1/(k² + b²)`.
fn inverse_square_shift(b: f64) -> f64 {
    (PI * b / (PI * b).tanh() - 1.0) / (2.0 * b * b)
}

/// `Σ_{k>=1} 1/(k² + b²)²`, the negated derivative of the above in `b²`.
fn inverse_square_shift_sq(b: f64) -> f64 {
    let g = PI * b / (PI * b).tanh() - 1.0;
    let sh = (PI * b).sinh();
    let dg = PI / (PI * b).tanh() - if sh.is_finite() { PI * PI * b / (sh * sh) } else { 0.0 };
    let df = dg / (2.0 * b * b) - g / (b * b * b);
    -df / (2.0 * b)
}

fn halves(m: usize) -> SequenceDescriptor {
    seq(Family::ExplicitList { values: vec![0.5; m] })
}

#[test]
fn psi_vanishes_at_zero_tilt() {
    for (name, f) in families() {
        let v = psi(&seq(f), 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(v.value, 0.0, "{name}");
    }
}

#[test]
fn single_fair_indicator() {
    let h = halves(1);
    for s in [-20.0, -1.0, 0.3, 5.0, 300.0] {
        let v = psi(&h, s, DEFAULT_TOL).unwrap().value;
        let want = if s > 30.0 { s - 2f64.ln() + (-s as f64).exp().ln_1p() } else { ((s as f64).exp() + 1.0).ln() - 2f64.ln() };
        assert!((v - want).abs() <= 1e-14 * want.abs().max(1.0), "s = {s}: {v} vs {want}");
    }
    assert!((psi_double_prime(&h, 0.0, DEFAULT_TOL).unwrap().value - 0.25).abs() < 1e-16);
}

#[test]
fn geometric_psi_matches_brute_force() {
    let g = seq(Family::StretchedExp { c: 1.0, beta: 1.0 });
    let s = 5.0f64;
    // 200 terms; the rest is below e^{s−200}
    let direct: f64 = (1..=200).rev().map(|k| (-(k as f64)).exp() * s.exp_m1()).map(f64::ln_1p).sum();
    let v = psi(&g, s, 1e-13).unwrap();
    assert!((v.value - direct).abs() <= 1e-12 * direct, "{} vs {direct}", v.value);
    assert!(v.contains(direct, 1e-13 * direct));
}

#[test]
fn psi_prime_examples() {
    let list = seq(Family::ExplicitList { values: (1..=30).map(|k| 0.5f64.powi(k)).collect() });
    let v = psi_prime(&list, 0.0, DEFAULT_TOL).unwrap().value;
    assert!((v - (1.0 - 0.5f64.powi(30))).abs() < 1e-15);

    for m in [1, 7, 40] {
        for s in [-3.0f64, 0.0, 2.5] {
            let v = psi_prime(&halves(m), s, DEFAULT_TOL).unwrap().value;
            let want = m as f64 * s.exp() / (s.exp() + 1.0);
            assert!((v - want).abs() <= 1e-14 * want, "m = {m}, s = {s}");
        }
    }
}

#[test]
fn inverse_square_mean_against_closed_sum() {
    let p = seq(Family::Polynomial { c: 1.0, beta: 2.0 });
    for s in [0.5f64, 3.0, 10.0, 25.0] {
        // r_k e^s/(r_k e^s + 1 − r_k) = e^s/(k² + e^s − 1)
        let b = s.exp_m1().sqrt();
        let exact = s.exp() * inverse_square_shift(b);
        let v = psi_prime(&p, s, 1e-12).unwrap();
        assert!((v.value - exact).abs() <= 1e-10 * exact, "s = {s}: {} vs {exact}", v.value);
    }
    // the leading-order expansion π e^{s/2}/2 − 1/2 is good to O(a), a = (e^s − 1)^{−1/2}
    let s = 10.0f64;
    let a = 1.0 / s.exp_m1().sqrt();
    let v = psi_prime(&p, s, 1e-12).unwrap().value;
    let expansion = PI * (s / 2.0).exp() / 2.0 - 0.5;
    assert!((v - expansion).abs() <= a, "gap {} vs a = {a}", v - expansion);
}

#[test]
fn inverse_square_variance() {
    let p = seq(Family::Polynomial { c: 1.0, beta: 2.0 });
    for s in [1.0f64, 8.0, 20.0] {
        let big = s.exp();
        let b = s.exp_m1().sqrt();
        let exact = big * inverse_square_shift(b) - big * big * inverse_square_shift_sq(b);
        let v = psi_double_prime(&p, s, 1e-12).unwrap().value;
        assert!((v - exact).abs() <= 1e-9 * exact, "s = {s}: {v} vs {exact}");
    }
    // ψ''(s) ~ σ² e^{s/2} with σ² = π/4
    let s = 20.0f64;
    let v = psi_double_prime(&p, s, 1e-12).unwrap().value;
    let ratio = v / (PI / 4.0 * (s / 2.0).exp());
    assert!((ratio - 1.0).abs() < 1e-3, "ratio {ratio}");
}

#[test]
fn variance_vanishes_for_sure_events() {
    let ones = seq(Family::ExplicitList { values: vec![1.0, 1.0, 1.0] });
    for s in [-2.0, 0.0, 4.0] {
        assert_eq!(psi_double_prime(&ones, s, DEFAULT_TOL).unwrap().value, 0.0);
        assert!((psi_prime(&ones, s, DEFAULT_TOL).unwrap().value - 3.0).abs() < 1e-15);
    }
}

#[test]
fn tilted_probability_examples() {
    for (name, f) in families() {
        let s = seq(f);
        for k in 1..=20usize.min(s.support().unwrap_or(20)) {
            let (p, r) = (tilted_prob(&s, 0.0, k).unwrap(), s.value(k).unwrap());
            assert!((p - r).abs() <= 1e-15 * r.max(1e-300), "{name}: k = {k}");
        }
    }
    let h = halves(3);
    assert!((tilted_prob(&h, 3f64.ln(), 2).unwrap() - 0.75).abs() < 1e-15);
    let t = TiltedSequence::new(h, 3f64.ln()).unwrap();
    let logs = t.tilted_terms(1).unwrap();
    assert!((logs.ln_r - 0.75f64.ln()).abs() < 1e-15 && (logs.ln_q - 0.25f64.ln()).abs() < 1e-15);
}

#[test]
fn tilted_means_sum_to_level_at_saddle() {
    for (name, f) in families() {
        let s = seq(f);
        if s.support().is_some() {
            continue;
        }
        let n = min_level(&s).unwrap() + 3;
        let sol = solve(&s, n, default_residual_tol(n)).unwrap();
        let head: f64 = (1..=n as usize).map(|k| tilted_prob(&s, sol.s, k).unwrap()).sum();
        let tail = tail_sum(&s, sol.s, n as usize, 1e-13).unwrap();
        let total = head + tail.value;
        assert!(
            (total - n as f64).abs() <= default_residual_tol(n) + tail.error_bound + 1e-12 * n as f64,
            "{name}: Σπ_k = {total}, n = {n}"
        );
    }
}

#[test]
fn core_identity_at_closed_form_saddle() {
    // (1/2)×10 at n = 6: e^s = 6/4
    let h = halves(10);
    let gap = core_identity_gap(&h, 1.5f64.ln(), 6).unwrap();
    assert!(gap.abs() < 1e-14, "gap {gap}");
}

#[test]
fn core_identity_matches_psi_prime() {
    for (name, f) in families() {
        let s = seq(f);
        let n = s.support().map_or(5, |m| m.saturating_sub(1).max(1)).min(5);
        for tilt in [-1.0, 0.5, 3.0, 9.0] {
            let gap = core_identity_gap(&s, tilt, n).unwrap();
            let d = psi_prime(&s, tilt, 1e-13).unwrap();
            let slack = d.error_bound + 1e-12 * d.value.max(n as f64);
            assert!((gap - (d.value - n as f64)).abs() <= slack, "{name}: s = {tilt}, gap {gap} vs {}", d.value - n as f64);
        }
    }
}

#[test]
fn psi_prime_increasing_and_psi_convex() {
    for (name, f) in families() {
        let s = seq(f);
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=34 {
            let tilt = -5.0 + 0.5 * i as f64;
            let p = evaluate(&s, tilt, DEFAULT_TOL).unwrap();
            let (v, e) = (p.psi_prime.value, p.psi_prime.error_bound);
            if let Some((pv, pe)) = prev {
                assert!(pv - pe < v + e, "{name}: ψ' not increasing at s = {tilt}");
            }
            prev = Some((v, e));
            assert!(p.psi_double_prime.value > 0.0, "{name}: ψ'' = {} at s = {tilt}", p.psi_double_prime.value);
        }
    }
}

#[test]
fn saddle_inequalities() {
    for (name, f) in families() {
        let s = seq(f);
        if s.support().is_some() {
            continue;
        }
        let m = min_level(&s).unwrap();
        for n in [m, m + 2, m + 5, m + 12] {
            let sol = solve(&s, n, default_residual_tol(n)).unwrap();
            let nu = n as usize;
            let tail = tail_sum(&s, sol.s, nu, 1e-13).unwrap();
            let head = head_sum(&s, sol.s, nu).unwrap();
            let var = psi_double_prime(&s, sol.s, 1e-13).unwrap();
            let slack = tail.error_bound + var.error_bound + 1e-12 * (tail.value + var.value);
            assert!(var.value <= 2.0 * tail.value + slack, "{name} n = {n}: (a)");
            let tail_small = (nu + 1..nu + 5000).all(|k| s.value(k).unwrap() <= 0.5);
            if tail_small {
                assert!(var.value >= tail.value / 3.0 - slack, "{name} n = {n}: (b)");
            }
            let inverse: f64 = (1..=nu).map(|k| (-s.terms(k).unwrap().ln_r - sol.s).exp()).sum();
            assert!(head <= inverse * (1.0 + 1e-12), "{name} n = {n}: (c)");
            let raw = raw_tail_sum(&s, nu, 1e-13).unwrap();
            let scaled = sol.s.exp() * (raw.value + raw.error_bound);
            assert!(tail.value - tail.error_bound <= scaled * (1.0 + 1e-12), "{name} n = {n}: (d)");
        }
    }
}

#[test]
fn tilted_normalization() {
    for (name, f) in families() {
        let s = seq(f);
        let big_k = s.support().unwrap_or(200).min(200);
        for tilt in [-2.0f64, 0.0, 2.0, 6.0] {
            let head: f64 = (1..=big_k).map(|k| tilted_prob(&s, tilt, k).unwrap()).sum();
            let bound = if s.support().is_some_and(|m| m <= big_k) {
                0.0
            } else {
                tilt.max(0.0).exp() * s.tail_sum_bound(big_k).unwrap().bound
            };
            let d = psi_prime(&s, tilt, 1e-13).unwrap();
            let slack = d.error_bound + 1e-12 * d.value;
            assert!(head <= d.value + slack, "{name}: s = {tilt}");
            assert!(head + bound >= d.value - slack, "{name}: s = {tilt}");
        }
    }
}

#[test]
fn unreachable_tolerance_reports_best_bound() {
    // a stretched exponential with β = 0.2 needs k^{0.2} > s + 23 for the tail to drop
    let s = seq(Family::StretchedExp { c: 1.0, beta: 0.2 });
    match psi(&s, 50.0, 1e-10) {
        Err(Error::Truncation { terms, best_bound }) => {
            assert!(terms > 0 && best_bound.is_finite() && best_bound > 0.0);
        }
        other => panic!("expected truncation failure, got {other:?}"),
    }
    assert!(matches!(psi(&s, f64::NAN, 1e-10), Err(Error::Domain(_))));
    assert!(matches!(psi(&s, 1.0, 0.0), Err(Error::Domain(_))));
}

/// `B = B₁ + B₂ + B₃ + 1` from the characteristic-function bound.
fn module_constant() -> f64 {
    let b1 = (PI.powi(3) / 6.0).min(PI * PI);
    let b2 = ((PI * PI / 2.0 + 1.0).powi(2) + PI * PI).sqrt() * PI.powi(3) / 6.0;
    let b3 = (PI.powi(8) / 16.0 + PI.powi(6) / 4.0).sqrt();
    b1 + b2 + b3 + 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn characteristic_function_bound(idx in 0usize..17, k in 1usize..60, tilt in -10.0f64..20.0, u in -PI..=PI) {
        let (_, f) = families().swap_remove(idx);
        let s = seq(f);
        let k = s.support().map_or(k, |m| k.min(m));
        let t = TiltedSequence::new(s, tilt).unwrap();
        let p = t.tilted_prob(k).unwrap();
        let q = t.tilted_terms(k).unwrap().ln_q.exp();
        // |E e^{iuη}| for a two-point variable, and its tilted variance
        let modulus = ((q + p * u.cos()).powi(2) + (p * u.sin()).powi(2)).sqrt();
        let b = module_constant();
        prop_assert!(modulus <= b * (-u * u * p * q / (2.0 * b)).exp() + 1e-15);
    }

    #[test]
    fn core_identity_on_random_lists(values in prop::collection::vec(0.01f64..0.99, 2..40), tilt in -4.0f64..6.0, frac in 0.0f64..1.0) {
        let n = ((values.len() - 1) as f64 * frac) as usize + 1;
        let s = seq(Family::ExplicitList { values: values.clone() });
        let gap = core_identity_gap(&s, tilt, n).unwrap();
        let e = tilt.exp();
        let brute: f64 = values.iter().map(|&r| r * e / (r * e + 1.0 - r)).sum::<f64>() - n as f64;
        prop_assert!((gap - brute).abs() <= 1e-12 * n as f64, "{} vs {}", gap, brute);
    }

    #[test]
    fn tilted_probability_increases_with_tilt(idx in 0usize..17, k in 1usize..50, s1 in -10.0f64..10.0, ds in 0.01f64..5.0) {
        let (_, f) = families().swap_remove(idx);
        let s = seq(f);
        let k = s.support().map_or(k, |m| k.min(m));
        let (a, b) = (tilted_prob(&s, s1, k).unwrap(), tilted_prob(&s, s1 + ds, k).unwrap());
        prop_assert!(a > 0.0 || s.terms(k).unwrap().ln_r.is_finite());
        prop_assert!(b <= 1.0);
        prop_assert!(a <= b);
    }
}

#[test]
fn power_weighted_range_at_moderate_tilt() {
    let s = seq(Family::PoissonizedRange {
        t: 3.0,
        weights: tailforge::sequences::Weights::Power { scale: 0.6, exponent: 4.0 },
        variant: tailforge::sequences::RangeVariant::Exactly { j: 1 },
    });
    let v = psi_prime(&s, 2.0, DEFAULT_TOL).unwrap();
    // r_k = x e^{−x} with x = 1.8 k^{−4}; sum far enough that the rest is below 1e-12
    let e = 2f64.exp();
    let direct: f64 = (1..=20_000u64)
        .rev()
        .map(|k| {
            let x = 1.8 / (k as f64).powi(4);
            let r = x * (-x).exp();
            r * e / (r * e + 1.0 - r)
        })
        .sum();
    assert!((v.value - direct).abs() <= v.error_bound + 1e-12, "{} vs {direct}", v.value);
}
