mod common;

use common::{families, seq};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use tailforge::regime::{
    c0, c0_lower_bound, classify, diagnostics, regime_c_limits, RegimeLabel, ThetaDist, ThetaLimits, Thresholds,
};
use tailforge::saddle::min_level;
use tailforge::sequences::Family;
use tailforge::Error;

fn unit_stretched_limits() -> ThetaLimits {
    // p_k = e^{−k+1/2}, q_k = e^{−k−1/2}
    ThetaLimits::Geometric { p1: (-0.5f64).exp(), q0: (-0.5f64).exp(), ratio: (-1.0f64).exp() }
}

#[test]
fn core_identity_at_every_diagnostic() {
    for (name, f) in families() {
        let s = seq(f);
        let m = min_level(&s).unwrap();
        let top = s.support().map_or(m + 10, |len| (len as u64 - 1).min(m + 10));
        for n in [m, top] {
            let d = diagnostics(&s, n).unwrap();
            let slack = d.tail_sum.error_bound + 1e-9 * n as f64;
            assert!((d.head_sum - d.tail_sum.value).abs() <= slack, "{name} n = {n}: {} vs {}", d.head_sum, d.tail_sum.value);
        }
    }
}

#[test]
fn inverse_square_variance_grows_like_exponential() {
    let p = seq(Family::Polynomial { c: 1.0, beta: 2.0 });
    let mut prev = 0.0;
    let mut prev_gap = f64::INFINITY;
    for n in [25u64, 50, 100] {
        let d = diagnostics(&p, n).unwrap();
        assert!(d.psi2.value > prev);
        prev = d.psi2.value;
        // σ² = π/(4 sin(π/2)) for c = 1, β = 2
        let gap = (d.psi2.value / (PI / 4.0 * (d.s / 2.0).exp()) - 1.0).abs();
        assert!(gap < prev_gap && gap < 0.05, "n = {n}: relative gap {gap}");
        prev_gap = gap;
    }
}

#[test]
fn quadratic_stretched_variance_vanishes() {
    let s = seq(Family::StretchedExp { c: 1.0, beta: 2.0 });
    let v: Vec<f64> = [10u64, 15, 20, 25].iter().map(|&n| diagnostics(&s, n).unwrap().psi2.value).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
    assert!(v[3] < 1e-3, "{v:?}");
}

#[test]
fn classify_examples() {
    let th = Thresholds::default();
    let b = classify(&seq(Family::Polynomial { c: 1.0, beta: 2.0 }), &[25, 50, 100, 200], &th).unwrap();
    assert_eq!(b.label, RegimeLabel::B);
    assert!(b.c_data.is_none());
    let a = classify(&seq(Family::StretchedExp { c: 1.0, beta: 2.0 }), &[10, 15, 20, 25], &th).unwrap();
    assert_eq!(a.label, RegimeLabel::A);

    let c = classify(&seq(Family::StretchedExp { c: 1.0, beta: 1.0 }), &[20, 40, 80, 160], &th).unwrap();
    assert_eq!(c.label, RegimeLabel::C);
    let data = c.c_data.expect("regime C carries limit data");
    for k in 1..=5 {
        let want = (-(k as f64) + 0.5).exp();
        assert!((data.p[k - 1] - want).abs() < 1e-6 * want, "p_{k} = {}", data.p[k - 1]);
    }
    for k in 0..=5 {
        let want = (-(k as f64) - 0.5).exp();
        assert!((data.q[k] - want).abs() < 1e-6 * want, "q_{k} = {}", data.q[k]);
    }
    let c0v = data.c0.expect("c0 computed").value;
    assert!(c0v > 0.0 && c0v < 1.0);
    // all grid rows are reported
    assert_eq!(c.grid.len(), 4);
    assert!(c.grid.iter().all(|g| (g.head_sum - g.tail_sum).abs() < 1e-9 * g.n as f64));
}

#[test]
fn classify_rejects_bad_grids() {
    let s = seq(Family::Polynomial { c: 1.0, beta: 2.0 });
    let th = Thresholds::default();
    assert!(matches!(classify(&s, &[10, 20], &th), Err(Error::Domain(_))));
    assert!(matches!(classify(&s, &[10, 30, 20], &th), Err(Error::Domain(_))));
}

#[test]
fn regime_c_limits_of_unit_stretched() {
    for c in [1.0f64, 0.5] {
        let s = seq(Family::StretchedExp { c, beta: 1.0 });
        let data = regime_c_limits(&s, &[40, 80], 8).unwrap();
        assert!((data.q[0] - (-0.5f64).exp()).abs() < 1e-6, "c = {c}: q_0 = {}", data.q[0]);
        assert!((data.p[0] - (-0.5f64).exp()).abs() < 1e-6, "c = {c}: p_1 = {}", data.p[0]);
        for k in 1..=8 {
            assert!((data.p[k - 1] - (0.5 - k as f64).exp()).abs() < 1e-6);
        }
        assert!(data.p_drift[0] < 1e-6 && data.q_drift[0] < 1e-6);
        for t in &data.theta {
            assert!((t.minus + t.zero + t.plus - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn finite_support_is_not_regime_c() {
    let s = seq(Family::ExplicitList { values: vec![0.5; 20] });
    assert!(matches!(regime_c_limits(&s, &[12, 15], 3), Err(Error::NotRegimeC(_))));
}

#[test]
fn vanishing_variance_is_not_regime_c() {
    // r_{n+1} e^{s_n} ≈ e^{−2n+√n} keeps shrinking, so p_1 drifts
    let s = seq(Family::StretchedExp { c: 1.0, beta: 2.0 });
    assert!(matches!(regime_c_limits(&s, &[10, 20], 3), Err(Error::NotRegimeC(_))));
}

#[test]
fn c0_for_tiny_limits_tends_to_one() {
    let mut prev = 0.0;
    for e in [1e-2, 1e-4, 1e-8] {
        let v = c0(&ThetaLimits::Explicit { p: vec![e], q: vec![e] }, 1e-14).unwrap().value;
        assert!(v > prev && v <= 1.0);
        assert!(1.0 - v <= 2.0 * e);
        prev = v;
    }
}

#[test]
fn c0_of_unit_stretched_limits() {
    let lim = unit_stretched_limits();
    let v = c0(&lim, 1e-14).unwrap();
    let lower = c0_lower_bound(&lim, 200);
    // the same product written out term by term
    let mut direct = 1.0 / (1.0 + (-0.5f64).exp());
    for m in 1..200 {
        let (p, q) = ((0.5 - m as f64).exp(), (-0.5 - m as f64).exp());
        direct *= (1.0 + p * q) / ((1.0 + p) * (1.0 + q));
    }
    assert!((lower - direct).abs() < 1e-14);
    assert!(v.value > lower && v.value < 1.0, "c0 = {}, lower = {lower}", v.value);

    // Monte Carlo over θ_0..θ_40
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let dists: Vec<ThetaDist> = std::iter::once(ThetaDist::initial((-0.5f64).exp()))
        .chain((1..=40).map(|m| ThetaDist::step((0.5 - m as f64).exp(), (-0.5 - m as f64).exp())))
        .collect();
    let samples = 200_000;
    let hits = (0..samples)
        .filter(|_| {
            let total: i32 = dists
                .iter()
                .map(|t| {
                    let u: f64 = rng.gen();
                    if u < t.minus {
                        -1
                    } else if u < t.minus + t.plus {
                        1
                    } else {
                        0
                    }
                })
                .sum();
            total == 0
        })
        .count();
    let est = hits as f64 / samples as f64;
    let se = (est * (1.0 - est) / samples as f64).sqrt();
    assert!((est - v.value).abs() < 4.0 * se, "MC {est} ± {se} vs {}", v.value);
}

#[test]
fn c0_stabilizes_beyond_cutoff() {
    let lim = unit_stretched_limits();
    let coarse = c0(&lim, 1e-8).unwrap();
    let fine = c0(&lim, 1e-15).unwrap();
    assert!(fine.terms_used > coarse.terms_used);
    assert!((coarse.value - fine.value).abs() <= coarse.error_bound);
    let explicit = ThetaLimits::Explicit {
        p: (1..=60).map(|k| (0.5 - k as f64).exp()).collect(),
        q: (0..=60).map(|k| (-0.5 - k as f64).exp()).collect(),
    };
    assert!((c0(&explicit, 1e-15).unwrap().value - fine.value).abs() < 1e-13);
}

#[test]
fn c0_needs_both_leading_limits() {
    let q_missing = ThetaLimits::Explicit { p: vec![0.5], q: vec![0.0, 0.3] };
    assert!(matches!(c0(&q_missing, 1e-9), Err(Error::Degenerate(_))));
    let p_missing = ThetaLimits::Geometric { p1: 0.0, q0: 0.5, ratio: 0.5 };
    assert!(matches!(c0(&p_missing, 1e-9), Err(Error::Degenerate(_))));
}

#[test]
fn balance_of_limit_sums() {
    // Σ_{k>=0} q_k/(1+q_k) = Σ_{k>=1} p_k/(1+p_k)
    let q: f64 = (0..200).map(|k| (-0.5 - k as f64).exp()).map(|x| x / (1.0 + x)).sum();
    let p: f64 = (1..200).map(|k| (0.5 - k as f64).exp()).map(|x| x / (1.0 + x)).sum();
    assert!((q - p).abs() < 1e-15);
    // and for limits read off a solved grid
    let s = seq(Family::StretchedExp { c: 0.7, beta: 1.0 });
    let data = regime_c_limits(&s, &[60, 120], 40).unwrap();
    let qs: f64 = data.q.iter().map(|x| x / (1.0 + x)).sum();
    let ps: f64 = data.p.iter().map(|x| x / (1.0 + x)).sum();
    assert!((qs - ps).abs() < 1e-9, "{qs} vs {ps}");
}

#[test]
fn variance_limit_reconstruction() {
    let s = seq(Family::StretchedExp { c: 1.0, beta: 1.0 });
    let report = classify(&s, &[20, 40, 80, 160], &Thresholds::default()).unwrap();
    let data = report.c_data.unwrap();
    let limit: f64 = data.q.iter().chain(&data.p).map(|x| x / ((1.0 + x) * (1.0 + x))).sum();
    let last = report.grid.last().unwrap().psi2;
    assert!((last - limit).abs() <= 0.05 * limit, "ψ'' = {last}, limit sum = {limit}");
}

#[test]
fn majorants_follow_the_regime() {
    let grow = [Family::Polynomial { c: 1.0, beta: 2.0 }, Family::GnedinSinh { lambda: 1.0 }];
    for f in grow {
        let s = seq(f.clone());
        let d: Vec<_> = [25u64, 50, 100, 200].iter().map(|&n| diagnostics(&s, n).unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1].head_majorant > w[0].head_majorant), "{f:?}");
        assert!(d.windows(2).all(|w| w[1].tail_majorant > w[0].tail_majorant), "{f:?}");
    }
    let decay = [Family::StretchedExp { c: 1.0, beta: 2.0 }, Family::StretchedExp { c: 0.5, beta: 3.0 }];
    for f in decay {
        let s = seq(f.clone());
        let d: Vec<_> = [10u64, 15, 20, 25, 30].iter().map(|&n| diagnostics(&s, n).unwrap()).collect();
        // these underflow in linear form, so compare logarithms
        assert!(d.windows(2).all(|w| w[1].ln_head_majorant < w[0].ln_head_majorant), "{f:?}");
        assert!(d.windows(2).all(|w| w[1].ln_tail_majorant < w[0].ln_tail_majorant), "{f:?}");
        assert!(d.iter().all(|x| x.ln_tail_majorant.is_finite() && x.ln_psi2.is_finite()), "{f:?}");
    }
}

proptest! {
    #[test]
    fn theta_masses(p in 0.0f64..50.0, q in 0.0f64..50.0) {
        let t = ThetaDist::step(p, q);
        prop_assert!(t.minus >= 0.0 && t.zero >= 0.0 && t.plus >= 0.0);
        prop_assert!((t.minus + t.zero + t.plus - 1.0).abs() < 1e-14);
        let d = (1.0 + p) * (1.0 + q);
        prop_assert!((t.plus - p / d).abs() < 1e-15 && (t.minus - q / d).abs() < 1e-15);
        let t0 = ThetaDist::initial(q);
        prop_assert!((t0.minus + t0.zero - 1.0).abs() < 1e-14 && t0.plus == 0.0);
    }

    #[test]
    fn c0_lies_between_bound_and_one(p1 in 0.01f64..3.0, q0 in 0.01f64..3.0, ratio in 0.05f64..0.8) {
        let lim = ThetaLimits::Geometric { p1, q0, ratio };
        let v = c0(&lim, 1e-13).unwrap();
        prop_assert!(v.value > 0.0 && v.value < 1.0);
        prop_assert!(v.value + v.error_bound >= c0_lower_bound(&lim, 400));
    }
}

#[test]
fn cubic_stretched_saddle_balances_neighbours() {
    // for β = 3 the balance 2e^{n³−s} = ½e^{s−(n+1)³} puts s_n at the midpoint plus log 2
    let s = seq(Family::StretchedExp { c: 0.5, beta: 3.0 });
    let mut prev = f64::INFINITY;
    for n in [10u64, 15, 20, 25, 30] {
        let d = diagnostics(&s, n).unwrap();
        let nf = n as f64;
        let mid = (nf.powi(3) + (nf + 1.0).powi(3)) / 2.0 + 2f64.ln();
        assert!((d.s - mid).abs() < 1e-9 * mid, "n = {n}: s = {}, expected {mid}", d.s);
        assert!(d.ln_psi2 < prev);
        prev = d.ln_psi2;
    }
    let report = classify(&s, &[10, 20, 30], &Thresholds::default()).unwrap();
    assert_eq!(report.label, RegimeLabel::A);
}
