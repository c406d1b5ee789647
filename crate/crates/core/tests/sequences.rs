mod common;

use common::{families, seq};
use proptest::prelude::*;
use std::f64::consts::{E, PI};
use tailforge::sequences::{perturb, Family, Perturbation, RangeVariant, SequenceDescriptor, Weights};
use tailforge::Error;

fn upto(s: &SequenceDescriptor, k: usize) -> usize {
    s.support().map_or(k, |m| m.min(k))
}

#[test]
fn values_are_probabilities() {
    for (name, f) in families() {
        let s = seq(f);
        for k in 1..=upto(&s, 10_000) {
            // positivity lives in the log domain; e^{-746} is not representable
            let t = s.terms(k).unwrap();
            assert!(t.ln_r.is_finite() && t.ln_r <= 0.0, "{name}: ln r_{k} = {}", t.ln_r);
            let v = s.value(k).unwrap();
            assert!((0.0..=1.0).contains(&v), "{name}: r_{k} = {v}");
        }
    }
}

#[test]
fn monotone_beyond_declared_index() {
    for (name, f) in families() {
        let s = seq(f);
        let k0 = s.monotone_from();
        for k in k0..upto(&s, 10_000) {
            assert!(s.value(k + 1).unwrap() <= s.value(k).unwrap(), "{name}: not monotone at {k} (k0 = {k0})");
        }
    }
}

#[test]
fn partial_sum_plus_tail_bound_tightens() {
    for (name, f) in families() {
        let s = seq(f);
        let k0 = s.monotone_from();
        let mut partial: f64 = (1..=k0.min(upto(&s, k0))).map(|k| s.value(k).unwrap()).sum();
        let mut prev = f64::INFINITY;
        for big_k in k0..upto(&s, k0 + 400) {
            let total = partial + s.tail_sum_bound(big_k).unwrap().bound;
            assert!(total <= prev * (1.0 + 1e-12), "{name}: bound grew at K = {big_k}");
            prev = total;
            partial += s.value(big_k + 1).unwrap();
        }
    }
}

#[test]
fn tail_bounds_dominate_long_partial_tails() {
    for (name, f) in families() {
        let s = seq(f);
        let k0 = s.monotone_from();
        for big_k in [k0, k0 + 5, k0 + 50] {
            let stop = upto(&s, big_k + 20_000);
            if big_k >= stop {
                continue;
            }
            let direct: f64 = (big_k + 1..=stop).map(|k| s.value(k).unwrap()).sum();
            let b = s.tail_sum_bound(big_k).unwrap();
            assert!(direct <= b.bound * (1.0 + 1e-10), "{name}: K = {big_k}, tail {direct} > bound {}", b.bound);
        }
        let far = s.tail_sum_bound(k0 + 100_000).unwrap().bound;
        let near = s.tail_sum_bound(k0).unwrap().bound;
        assert!(far <= near && far < 1e-2, "{name}: bound does not decay ({near} -> {far})");
    }
}

#[test]
fn documented_values() {
    let ninth = seq(Family::Polynomial { c: 1.0, beta: 2.0 }).value(3).unwrap();
    assert!((ninth - 1.0 / 9.0).abs() <= 2.0 * f64::EPSILON / 9.0);
    let g = seq(Family::GnedinSinh { lambda: 1.0 }).value(1).unwrap();
    assert!((g - 1.0 / (PI * PI + 1.0)).abs() < 1e-16);
    let range = seq(Family::PoissonizedRange {
        t: 2.0,
        weights: Weights::Geometric { scale: 1.0, ratio: 0.5 },
        variant: RangeVariant::AtLeast { j: 1 },
    });
    assert!((range.value(1).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    let ginibre = seq(Family::GinibreGamma { t: 2.0 });
    assert!((ginibre.value(1).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
    assert!((ginibre.value(2).unwrap() - (1.0 - 3.0 * (-2.0f64).exp())).abs() < 1e-14);
}

#[test]
fn documented_tail_bounds() {
    let poly = seq(Family::Polynomial { c: 1.0, beta: 2.0 });
    let b = poly.tail_sum_bound(10).unwrap().bound;
    assert!((b - 0.1).abs() < 1e-15);
    // Σ_{k>10} k^{-2} = ψ₁(11), computed here as a long sum plus the integral remainder
    let direct: f64 = (11..=1_000_000u64).map(|k| 1.0 / (k as f64 * k as f64)).sum::<f64>() + 1.0 / 1_000_000.5;
    assert!(direct < b);

    let list = seq(Family::ExplicitList { values: vec![0.2, 0.1, 0.4] });
    assert_eq!(list.tail_sum_bound(3).unwrap().bound, 0.0);
    assert_eq!(list.tail_sum_bound(7).unwrap().bound, 0.0);

    let geo = seq(Family::StretchedExp { c: 1.0, beta: 1.0 });
    let b = geo.tail_sum_bound(5).unwrap().bound;
    let closed = (-5.0f64).exp() / (1.0 - (-1.0f64).exp());
    assert!((b - closed).abs() < 1e-15 * closed);
    // the documented value is the geometric sum starting at k = K
    let direct: f64 = (5..400).rev().map(|k| (-(k as f64)).exp()).sum();
    assert!((direct - closed).abs() < 1e-14 * closed);
    let beyond: f64 = (6..400).rev().map(|k| (-(k as f64)).exp()).sum();
    assert!(beyond < b);
}

#[test]
fn domain_errors() {
    assert!(matches!(SequenceDescriptor::new(Family::Polynomial { c: 1.0, beta: 1.0 }), Err(Error::Domain(_))));
    assert!(matches!(SequenceDescriptor::new(Family::StretchedExp { c: 1.0, beta: 0.0 }), Err(Error::Domain(_))));
    assert!(matches!(SequenceDescriptor::new(Family::GnedinSinh { lambda: -1.0 }), Err(Error::Domain(_))));
    assert!(SequenceDescriptor::new(Family::ExplicitList { values: vec![0.5, 0.0] }).is_err());
    assert!(SequenceDescriptor::new(Family::ExplicitList { values: vec![] }).is_err());
    let p = seq(Family::Polynomial { c: 1.0, beta: 2.0 });
    assert!(matches!(p.value(0), Err(Error::Domain(_))));
}

#[test]
fn records_with_halving_weights() {
    let s = seq(Family::RecordsFAlpha { alpha: Weights::Geometric { scale: 1.0, ratio: 0.5 } });
    let mut prefix = 0.0;
    let mut partial = 0.0;
    for i in 1..=60 {
        let a = 0.5f64.powi(i);
        prefix += a;
        let r = s.value(i as usize).unwrap();
        assert!((r - a / prefix).abs() < 1e-14 * r, "i = {i}");
        partial += r;
    }
    assert!(partial < 1.0 + s.tail_sum_bound(0).unwrap().bound);
    assert!(s.tail_sum_bound(0).unwrap().bound.is_finite());
}

#[test]
fn zero_perturbation_is_identity() {
    let base = seq(Family::Polynomial { c: 0.5, beta: 2.5 });
    let p = perturb(&base, Perturbation::List { epsilons: vec![0.0; 100] }).unwrap();
    for k in 1..=100 {
        assert_eq!(p.value(k).unwrap(), base.value(k).unwrap());
    }
}

#[test]
fn negated_perturbation_reproduces_gnedin() {
    let lambda = 1.0f64;
    let base = seq(Family::Polynomial { c: lambda * lambda / (PI * PI), beta: 2.0 });
    let p = perturb(&base, Perturbation::Negated { sequence: Box::new(Family::GnedinSinh { lambda }) }).unwrap();
    let g = seq(Family::GnedinSinh { lambda });
    for k in 1..=2000 {
        let (u, v) = (p.value(k).unwrap(), g.value(k).unwrap());
        assert!((u - v).abs() <= 1e-14 * v, "k = {k}: {u} vs {v}");
        let eps = p.epsilon(k).unwrap();
        assert!((eps + v).abs() <= 1e-15, "ε_{k} = {eps}");
    }
}

#[test]
fn saturation_perturbation() {
    let base = seq(Family::StretchedExp { c: 2.0, beta: 1.5 });
    let p = perturb(&base, Perturbation::ExpSaturation).unwrap();
    for k in 1..=200 {
        let (ln_tp, ln_u) = (base.terms(k).unwrap().ln_r, p.terms(k).unwrap().ln_r);
        // r (1 − r/2) <= 1 − e^{−r} <= r
        assert!(ln_u <= ln_tp && ln_u.is_finite(), "k = {k}");
        let tp = base.value(k).unwrap();
        assert!(ln_u >= ln_tp + (-tp / 2.0).ln_1p() - 1e-15 * ln_tp.abs(), "k = {k}");
        if tp > f64::MIN_POSITIVE {
            // u is rebuilt from its logarithm, so allow a few |ln u|·ε
            let u = p.value(k).unwrap();
            let tol = 4.0 * f64::EPSILON * (1.0 + ln_u.abs());
            assert!((u - (-(-tp).exp_m1())).abs() <= tol * u, "k = {k}");
        }
        let eps = p.epsilon(k).unwrap();
        assert!(eps.abs() <= tp / 2.0, "k = {k}");
    }
}

#[test]
fn invalid_perturbation_rejected() {
    let base = seq(Family::Polynomial { c: 1.0, beta: 2.0 });
    let err = perturb(&base, Perturbation::List { epsilons: vec![0.5] }).unwrap_err();
    assert!(matches!(err, Error::InvalidPerturbation { k: 1, .. }));
    let err = perturb(&base, Perturbation::List { epsilons: vec![0.0, -1.0] }).unwrap_err();
    assert!(matches!(err, Error::InvalidPerturbation { k: 2, .. }));
}

#[test]
fn json_schema() {
    let s = SequenceDescriptor::from_json(r#"{"family": "polynomial", "c": 1.0, "beta": 2.0}"#).unwrap();
    assert_eq!(s.family(), &Family::Polynomial { c: 1.0, beta: 2.0 });
    assert!(SequenceDescriptor::from_json(r#"{"family": "polynomial", "c": 1.0, "beta": 2.0, "x": 1}"#).is_err());
    assert!(SequenceDescriptor::from_json(r#"{"family": "polynomial", "c": 1.0, "beta": 0.5}"#).is_err());
    for (name, f) in families() {
        let text = serde_json::to_string(&f).unwrap();
        let back = SequenceDescriptor::from_json(&text).unwrap();
        assert_eq!(back.family(), &f, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomial_invariants(c in 0.05f64..=1.0, beta in 1.1f64..5.0, k in 1usize..5000) {
        let s = seq(Family::Polynomial { c, beta });
        let v = s.value(k).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(s.value(k + 1).unwrap() <= v);
        let direct: f64 = (k + 1..=k + 2000).map(|j| s.value(j).unwrap()).sum();
        prop_assert!(direct <= s.tail_sum_bound(k).unwrap().bound);
    }

    #[test]
    fn stretched_invariants(c in 0.05f64..=E, beta in 0.2f64..3.0, k in 1usize..200) {
        let s = seq(Family::StretchedExp { c, beta });
        let k0 = s.monotone_from();
        let ln_r = s.terms(k).unwrap().ln_r;
        prop_assert!(ln_r.is_finite() && ln_r <= 0.0);
        let big_k = k.max(k0);
        let direct: f64 = (big_k + 1..=big_k + 5000).map(|j| s.value(j).unwrap()).sum();
        prop_assert!(direct <= s.tail_sum_bound(big_k).unwrap().bound * (1.0 + 1e-12));
    }

    #[test]
    fn explicit_lists_round_trip(values in prop::collection::vec(0.001f64..0.999, 1..40)) {
        let f = Family::ExplicitList { values: values.clone() };
        let s = seq(f.clone());
        prop_assert_eq!(s.support(), Some(values.len()));
        for (i, v) in values.iter().enumerate() {
            let back = s.value(i + 1).unwrap();
            prop_assert!((back - v).abs() <= 4.0 * f64::EPSILON * (1.0 + v.ln().abs()) * v);
        }
        let text = serde_json::to_string(&f).unwrap();
        let back = SequenceDescriptor::from_json(&text).unwrap();
        prop_assert_eq!(back.family(), &f);
    }

    #[test]
    fn gnedin_tail_bound(lambda in 0.1f64..5.0, big_k in 1usize..500) {
        for f in [Family::GnedinSinh { lambda }, Family::GnedinCosh { lambda }] {
            let s = seq(f);
            let direct: f64 = (big_k + 1..=big_k + 20_000).map(|j| s.value(j).unwrap()).sum();
            prop_assert!(direct <= s.tail_sum_bound(big_k).unwrap().bound);
        }
    }
}
