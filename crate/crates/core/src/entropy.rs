//! Relative entropy `H(x, p)` between Bernoulli laws, and the functions
//! `B(z) = H(α, z)` and `a(z) = sgn(α - z) sqrt(2 B(z))` built on it.
//!
//! Everything here is written in terms of `φ₁(u) = (1+u) ln(1+u) - u`:
//!
//! ```text
//! H(x, p) = p φ₁((x-p)/p) + (1-p) φ₁((p-x)/(1-p))
//! ```
//!
//! Both terms are nonnegative, so nothing cancels between them, and `φ₁`
//! itself switches to its power series near `u = 0`. This keeps full relative
//! accuracy as `x → p`, which is where the bounds are tightest.

use crate::error::{check_finite, domain, Result};

/// Number of trials and success probability of a binomial law.
///
/// Bound evaluation requires `n >= 1` and `0 < p < 1`. The degenerate laws
/// `p ∈ {0, 1}` are only handled by the exact oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialParams {
    n: u64,
    p: f64,
}

impl BinomialParams {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if n == 0 {
            return domain("number of trials must be at least 1");
        }
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("success probability must lie in (0, 1), got {p}"));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The law with success and failure swapped, `(n, 1 - p)`.
    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            p: 1.0 - self.p,
        }
    }
}

/// A ratio strictly inside `(0, 1)`, typically `(k + 1) / n`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {value}"));
        }
        Ok(Self(value))
    }

    /// `numerator / denominator`, requiring `0 < numerator < denominator`.
    pub fn from_counts(numerator: u64, denominator: u64) -> Result<Self> {
        if numerator == 0 || numerator >= denominator {
            return domain(format!(
                "alpha = {numerator}/{denominator} must lie strictly inside (0, 1)"
            ));
        }
        Ok(Self(numerator as f64 / denominator as f64))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `H(x, p) = x ln(x/p) + (1-x) ln((1-x)/(1-p))`, with `0 ln 0 = 0`.
pub fn relative_entropy(x: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("x must lie in [0, 1], got {x}"));
    }
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    Ok(entropy_offset(p, x - p))
}

/// Sign with `sgn(0) = 0`.
pub fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `B(z) = α ln(α/z) + (1-α) ln((1-α)/(1-z))`.
pub fn b_function(z: f64, alpha: Alpha) -> Result<f64> {
    check_open_unit(z, "z")?;
    Ok(entropy_offset(z, alpha.0 - z))
}

/// The signed root `a(z)` of `B(z) = a²/2`, positive for `z < α`.
pub fn a_function(z: f64, alpha: Alpha) -> Result<f64> {
    check_open_unit(z, "z")?;
    Ok(a_value(z, alpha.0))
}

pub(crate) fn a_value(z: f64, alpha: f64) -> f64 {
    if z == alpha {
        return 0.0;
    }
    let root = (2.0 * entropy_offset(z, alpha - z)).sqrt();
    if alpha > z {
        root
    } else {
        -root
    }
}

pub(crate) fn check_open_unit(z: f64, what: &str) -> Result<()> {
    check_finite(z, what)?;
    if z > 0.0 && z < 1.0 {
        Ok(())
    } else {
        domain(format!("{what} must lie in (0, 1), got {z}"))
    }
}

/// `H(p + d, p)`, with `d` the (accurately known) offset of `x` from `p`.
pub(crate) fn entropy_offset(p: f64, d: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    p * phi1(d / p) + q * phi1(-d / q)
}

/// `H(k/n, p)` without rounding `k/n` first: the offset `k - np` is formed
/// with a single rounding.
pub(crate) fn count_entropy(k: u64, n: u64, p: f64) -> f64 {
    let nf = n as f64;
    let d_n = (-nf).mul_add(p, k as f64);
    if d_n == 0.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    p * phi1(d_n / (nf * p)) + q * phi1(-d_n / (nf * q))
}

/// Signed offset `k - np`, exact up to one rounding; zero iff `k = np` exactly.
pub(crate) fn count_offset(k: u64, n: u64, p: f64) -> f64 {
    (-(n as f64)).mul_add(p, k as f64)
}

/// `(z - α)² / (2 B(z))`, continuous through `z = α` where it equals `α(1-α)`.
pub(crate) fn quadratic_ratio(alpha: f64, z: f64) -> f64 {
    let d = alpha - z;
    let s = phi1_over_sq(d / z) / z + phi1_over_sq(-d / (1.0 - z)) / (1.0 - z);
    0.5 / s
}

/// `φ₁(u) = (1+u) ln(1+u) - u` for `u >= -1`.
pub(crate) fn phi1(u: f64) -> f64 {
    if u.abs() < SERIES_RADIUS {
        u * u * series(u)
    } else if u == -1.0 {
        1.0
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

/// `φ₁(u) / u²`, equal to `1/2` at `u = 0`.
pub(crate) fn phi1_over_sq(u: f64) -> f64 {
    if u.abs() < SERIES_RADIUS {
        series(u)
    } else if u.abs() <= 1.0 {
        phi1(u) / (u * u)
    } else {
        // Divide through by u first so that u² never overflows.
        ((1.0 + 1.0 / u) * u.ln_1p() - 1.0) / u
    }
}

const SERIES_RADIUS: f64 = 0.1;

/// `Σ_{m>=0} (-u)^m / ((m+1)(m+2))`; 18 terms reach 1e-19 for `|u| < 0.1`.
fn series(u: f64) -> f64 {
    let mut acc = 0.0;
    for m in (0..18).rev() {
        let m = m as f64;
        acc = acc * (-u) + 1.0 / ((m + 1.0) * (m + 2.0));
    }
    acc
}
