//! The bound sequence
//!
//! ```text
//! C(0) = (1-p)^n,   C(n) = 1 - p^n,
//! C(k) = Φ(sgn(k/n - p) sqrt(2n H(k/n, p))),   1 <= k <= n-1,
//! ```
//!
//! which sandwiches the binomial distribution function:
//! `C(k) <= P{X <= k} <= C(k+1)`.

use crate::dd::Dd;
use crate::entropy::{count_entropy, count_offset, BinomialParams};
use crate::error::{domain, Result};
use crate::special_fn::{log_normal_cdf, normal_cdf, normal_quantile};

/// Certified lower and upper bounds for `P{X <= k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    pub n: u64,
    pub p: f64,
    pub k: u64,
    /// `C(k)`.
    pub lower: f64,
    /// `C(k+1)`.
    pub upper: f64,
    pub log_lower: f64,
    pub log_upper: f64,
}

/// Two consecutive integers (or one, at the ends of the support) that
/// contain the `q`-quantile `min{k : P{X <= k} >= q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileBracket {
    pub q: f64,
    pub k_low: u64,
    pub k_high: u64,
}

impl QuantileBracket {
    pub fn contains(&self, k: u64) -> bool {
        k == self.k_low || k == self.k_high
    }
}

/// One value `C(k)` together with its complement `1 - C(k)`, both in linear
/// and log form.
///
/// The complement is evaluated directly (as `Φ(-z)`, `p^n`, ...) rather than
/// as `1 - C(k)`, so whichever tail is small is known to full relative
/// precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub cdf: f64,
    pub sf: f64,
    pub log_cdf: f64,
    pub log_sf: f64,
}

impl BoundValue {
    fn from_argument(z: f64) -> Self {
        Self {
            cdf: normal_cdf(z),
            sf: normal_cdf(-z),
            log_cdf: log_normal_cdf(z),
            log_sf: log_normal_cdf(-z),
        }
    }

    /// `true` if the value sits in the upper half, where `sf` is the
    /// accurate representation.
    pub fn upper_half(&self) -> bool {
        self.log_sf < self.log_cdf
    }
}

fn check_k(params: &BinomialParams, k: u64) -> Result<()> {
    if k > params.n() {
        return domain(format!("k must lie in [0, {}], got {k}", params.n()));
    }
    Ok(())
}

/// Signed normal argument `sgn(k/n - p) sqrt(2n H(k/n, p))` for
/// `1 <= k <= n-1`.
pub(crate) fn normal_argument(n: u64, p: f64, k: u64) -> f64 {
    let offset = count_offset(k, n, p);
    if offset == 0.0 {
        return 0.0;
    }
    let root = (2.0 * n as f64 * count_entropy(k, n, p)).sqrt();
    if offset > 0.0 {
        root
    } else {
        -root
    }
}

/// `base^n` to about 30 digits, so the end-point equalities
/// `C(0) = P{X <= 0}` and `1 - C(n) = P{X = n}` hold to the last bit rather
/// than a few units off.
fn end_power(base: Dd, n: u64) -> Dd {
    if n == 1 {
        return base;
    }
    base.ln().mul_f64(n as f64).exp()
}

/// `1 - x` for an end-point power, switching to `-expm1(log_x)` once the
/// result is small enough that the absolute accuracy of `x` no longer
/// carries enough relative accuracy.
fn end_complement(x: Dd, log_x: f64) -> f64 {
    let rest = Dd::ONE - x;
    if rest.hi > 1e-10 {
        rest.to_f64()
    } else {
        -log_x.exp_m1()
    }
}

/// `C(k)` and its complement for `0 <= k <= n`.
pub fn bound_value(params: &BinomialParams, k: u64) -> Result<BoundValue> {
    check_k(params, k)?;
    Ok(bound_value_unchecked(params.n(), params.p(), k))
}

pub(crate) fn bound_value_unchecked(n: u64, p: f64, k: u64) -> BoundValue {
    let nf = n as f64;
    if k == 0 {
        let log_cdf = nf * (-p).ln_1p();
        let power = end_power(Dd::diff(1.0, p), n);
        // With one trial `1 - p` is already correctly rounded, and may be an
        // exact tie that the double-double sum would resolve differently.
        let cdf = if n == 1 { 1.0 - p } else { power.to_f64() };
        let sf = end_complement(power, log_cdf);
        BoundValue {
            cdf,
            sf,
            log_cdf,
            log_sf: sf.ln(),
        }
    } else if k == n {
        let log_sf = nf * p.ln();
        let power = end_power(Dd::new(p), n);
        let cdf = end_complement(power, log_sf);
        let sf = power.to_f64();
        BoundValue {
            cdf,
            sf,
            log_cdf: if cdf < 0.5 { cdf.ln() } else { (-sf).ln_1p() },
            log_sf,
        }
    } else if count_offset(k, n, p) == 0.0 {
        // k = np exactly: sgn(0) = 0 and the bound is Φ(0).
        BoundValue {
            cdf: 0.5,
            sf: 0.5,
            log_cdf: -std::f64::consts::LN_2,
            log_sf: -std::f64::consts::LN_2,
        }
    } else {
        BoundValue::from_argument(normal_argument(n, p, k))
    }
}

/// `C(k)` for `0 <= k <= n`.
pub fn c_bound(params: &BinomialParams, k: u64) -> Result<f64> {
    Ok(bound_value(params, k)?.cdf)
}

/// `ln C(k)`, finite even where `C(k)` underflows.
pub fn log_c_bound(params: &BinomialParams, k: u64) -> Result<f64> {
    Ok(bound_value(params, k)?.log_cdf)
}

/// `(C(k), C(k+1))` for `0 <= k <= n-1`.
pub fn cdf_bounds(params: &BinomialParams, k: u64) -> Result<BoundPair> {
    if k >= params.n() {
        return domain(format!(
            "bound pair needs 0 <= k <= n - 1 = {}, got {k}",
            params.n() - 1
        ));
    }
    let lo = bound_value_unchecked(params.n(), params.p(), k);
    let hi = bound_value_unchecked(params.n(), params.p(), k + 1);
    Ok(BoundPair {
        n: params.n(),
        p: params.p(),
        k,
        lower: lo.cdf,
        upper: hi.cdf,
        log_lower: lo.log_cdf,
        log_upper: hi.log_cdf,
    })
}

/// `1 - C_{n,1-p}(n-k)`, which equals `C_{n,p}(k)`.
pub fn complement_bound(params: &BinomialParams, k: u64) -> Result<f64> {
    check_k(params, k)?;
    let flipped = BinomialParams::new(params.n(), 1.0 - params.p())?;
    Ok(1.0 - c_bound(&flipped, params.n() - k)?)
}

/// `C(k) >= q`, decided on whichever tail carries the precision.
fn reaches(n: u64, p: f64, k: u64, q: f64) -> bool {
    let v = bound_value_unchecked(n, p, k);
    if q > 0.5 {
        v.sf <= 1.0 - q
    } else {
        v.cdf >= q
    }
}

/// Brackets the `q`-quantile of the binomial law between two consecutive
/// integers.
///
/// With `k* = min{k : C(k) >= q}` the true quantile lies in `{k* - 1, k*}`:
/// `P{X <= k*} >= C(k*) >= q`, and for `k < k* - 1`,
/// `P{X <= k} <= C(k+1) < q`.
pub fn bracket_quantile(params: &BinomialParams, q: f64) -> Result<QuantileBracket> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("quantile level must lie in (0, 1), got {q}"));
    }
    let (n, p) = (params.n(), params.p());
    let bracket = |k_star: u64| QuantileBracket {
        q,
        k_low: k_star.saturating_sub(1),
        k_high: k_star,
    };

    if reaches(n, p, 0, q) {
        return Ok(bracket(0));
    }
    if !reaches(n, p, n, q) {
        // P{X <= n-1} = C(n) < q, so the quantile is n itself.
        return Ok(QuantileBracket {
            q,
            k_low: n,
            k_high: n,
        });
    }

    let x = invert_argument(n, p, normal_quantile(q));
    let mut k = ((n as f64 * x).floor() as u64).saturating_sub(1).min(n);
    // C is increasing, so walking from the analytic guess is exact; the walk
    // is at most a couple of steps.
    while k > 0 && reaches(n, p, k, q) {
        k -= 1;
    }
    while !reaches(n, p, k, q) {
        k += 1;
    }
    Ok(bracket(k))
}

/// Solves `sgn(x - p) sqrt(2n H(x, p)) = z` for `x ∈ [0, 1]` by bisection on
/// the side of `p` selected by the sign of `z`, clamping at the ends.
fn invert_argument(n: u64, p: f64, z: f64) -> f64 {
    use crate::entropy::entropy_offset;
    let target = z * z / (2.0 * n as f64);
    let (mut inside, mut outside) = if z >= 0.0 { (p, 1.0) } else { (p, 0.0) };
    if entropy_offset(p, outside - p) <= target {
        return outside;
    }
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if entropy_offset(p, mid - p) < target {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}
