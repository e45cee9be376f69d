//! Two-sided bounds on the binomial distribution function.
//!
//! For `X ~ Bin(n, p)` and `0 <= k <= n - 1`,
//!
//! ```text
//! C(k) <= P{X <= k} <= C(k + 1),   C(k) = Φ(sign(k - np) · sqrt(2n H(k/n, p)))
//! ```
//!
//! where `H` is the relative entropy between Bernoulli laws. The crate also
//! ships a refined upper correction, an exact rational oracle and
//! verification sweeps that check the inequality against it.

// Constants keep every digit of their reference value; the compiler
// rounds once.
#![allow(clippy::excessive_precision)]

pub mod bounds;
mod dd;
pub mod entropy;
pub mod error;
pub mod input;
pub mod oracle;
pub mod quadrature;
pub mod refine;
pub mod special_fn;
pub mod verify;

pub use bounds::{
    bound_value, bracket_quantile, c_bound, cdf_bounds, complement_bound, log_c_bound, BoundPair,
    BoundValue, QuantileBracket,
};
pub use entropy::{a_function, b_function, relative_entropy, sign_of, Alpha, BinomialParams};
pub use error::{Error, Result};
pub use oracle::{
    cdf_beta, exact_cdf, exact_cdf_with_limit, exact_pmf, exact_quantile, ln_cdf_beta, ln_sf_beta,
    ExactBinomial, ExactProb, DEFAULT_EXACT_LIMIT,
};
pub use refine::{
    delta_numeric, delta_refined_bound, find_p0, g_function, refined_upper, refined_upper_value,
    Branch, DeltaBound, RefineContext, RefinedUpper,
};
pub use special_fn::{
    log_std_normal_cdf, std_normal_cdf, std_normal_pdf, std_normal_quantile, stirling_correction,
    stirling_remainder, StirlingRemainder,
};
pub use verify::{
    run_sweep, Check, CheckSummary, Failure, Fault, RefineStats, SweepConfig, SweepReport,
};
