//! Tail probabilities of infinite sums of independent indicators.
//!
//! `Y = Σ_k 1{A_k}` with `P(A_k) = r_k` and `Σ r_k < ∞`. The crate evaluates
//! the cumulant function `ψ(s) = Σ log(r_k e^s + 1 − r_k)` with certified
//! truncation bounds, solves the saddle-point equation `ψ'(s) = n`,
//! classifies the asymptotic regime from the behaviour of `ψ''(s_n)`, and
//! produces saddle-point estimates of `P{Y = n}` and `P{Y >= n}` next to
//! explicit closed-form asymptotics for four parametric families. Exact
//! convolution and tilted Monte Carlo oracles make every estimate checkable.
//!
//! All probabilities are handled in natural-log form.

#![forbid(unsafe_code)]

pub mod cgf;
pub mod closed_forms;
pub mod error;
pub mod estimates;
pub mod exact;
pub mod numeric;
pub mod regime;
pub mod saddle;
pub mod sequences;
pub mod specfun;

pub use error::{Error, Result};
pub use numeric::BoundedValue;
