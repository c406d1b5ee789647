//! Special functions and proof-level series evaluators.
//!
//! Everything here works on the real line in double precision: ζ and the
//! Hurwitz zeta, log-gamma, the Euler beta function, Bernoulli numbers and
//! polynomials, the regularized incomplete gamma functions, adaptive
//! quadrature, the periodic residual `h` with its primitive, and direct-sum
//! validators for the auxiliary series expansions.

mod bernoulli;
mod gamma;
mod lemmas;
mod quad;
mod residual;
mod zeta;

pub use bernoulli::{bernoulli_number, bernoulli_number_exact, bernoulli_poly, MAX_BERNOULLI_INDEX};
pub use gamma::{
    euler_beta, gamma, ln_gamma, ln_regularized_lower_gamma, ln_regularized_upper_gamma, ln_upper_gamma,
    regularized_lower_gamma,
};
pub use lemmas::{lemma_series, sinh_product_log, LemmaSeriesResult, SeriesLemma};
pub use quad::{integrate, integrate_to_infinity};
pub use residual::{
    fractional_residual, fractional_residual_integral, fractional_residual_integral_series,
    fractional_residual_truncation, geometric_log_constant,
};
pub use zeta::{fermi_log_moment, fermi_moment, hurwitz_scaled, zeta};
