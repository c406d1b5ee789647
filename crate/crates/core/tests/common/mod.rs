#![allow(dead_code)]

use tailforge::sequences::{Family, Perturbation, RangeVariant, SequenceDescriptor, Weights};

pub fn seq(f: Family) -> SequenceDescriptor {
    SequenceDescriptor::new(f).expect("valid family")
}

/// One representative of every built-in family and perturbation kind.
pub fn families() -> Vec<(&'static str, Family)> {
    let halves = Weights::Geometric { scale: 1.0, ratio: 0.5 };
    vec![
        ("polynomial-1-2", Family::Polynomial { c: 1.0, beta: 2.0 }),
        ("polynomial-half-3", Family::Polynomial { c: 0.5, beta: 3.0 }),
        ("stretched-1-0.5", Family::StretchedExp { c: 1.0, beta: 0.5 }),
        ("stretched-1-1", Family::StretchedExp { c: 1.0, beta: 1.0 }),
        ("stretched-1-2", Family::StretchedExp { c: 1.0, beta: 2.0 }),
        ("stretched-half-1.5", Family::StretchedExp { c: 0.5, beta: 1.5 }),
        (
            "range-at-least",
            Family::PoissonizedRange { t: 2.0, weights: halves.clone(), variant: RangeVariant::AtLeast { j: 1 } },
        ),
        (
            "range-exactly",
            Family::PoissonizedRange {
                t: 3.0,
                weights: Weights::StretchedExp { scale: 0.6, beta: 0.5 },
                variant: RangeVariant::Exactly { j: 1 },
            },
        ),
        (
            "range-even",
            Family::PoissonizedRange {
                t: 2.0,
                weights: Weights::StretchedExp { scale: 0.7, beta: 1.0 },
                variant: RangeVariant::Even,
            },
        ),
        ("records", Family::RecordsFAlpha { alpha: halves }),
        ("gnedin-sinh", Family::GnedinSinh { lambda: 1.0 }),
        ("gnedin-cosh", Family::GnedinCosh { lambda: 2.0 }),
        ("ginibre", Family::GinibreGamma { t: 3.0 }),
        ("list", Family::ExplicitList { values: vec![0.5, 0.3, 0.2, 0.1] }),
        (
            "perturbed-list",
            Family::Perturbed {
                base: Box::new(Family::Polynomial { c: 0.5, beta: 2.0 }),
                perturbation: Perturbation::List { epsilons: vec![0.3, -0.2, 0.1] },
            },
        ),
        (
            "perturbed-negated",
            Family::Perturbed {
                base: Box::new(Family::Polynomial { c: 1.0 / (std::f64::consts::PI * std::f64::consts::PI), beta: 2.0 }),
                perturbation: Perturbation::Negated { sequence: Box::new(Family::GnedinSinh { lambda: 1.0 }) },
            },
        ),
        (
            "perturbed-saturation",
            Family::Perturbed {
                base: Box::new(Family::StretchedExp { c: 1.0, beta: 1.5 }),
                perturbation: Perturbation::ExpSaturation,
            },
        ),
    ]
}

/// Families whose probabilities are all strictly below one.
pub fn families_below_one() -> Vec<(&'static str, Family)> {
    families()
        .into_iter()
        .filter(|(_, f)| {
            let s = seq(f.clone());
            (1..=200).all(|k| s.value(k).map(|v| v < 1.0).unwrap_or(true))
        })
        .collect()
}

/// `log C(m, j) − m log 2`.
pub fn log_binomial_half(m: u64, j: u64) -> f64 {
    let ln_fact = |n: u64| (1..=n).map(|i| (i as f64).ln()).sum::<f64>();
    ln_fact(m) - ln_fact(j) - ln_fact(m - j) - m as f64 * std::f64::consts::LN_2
}
