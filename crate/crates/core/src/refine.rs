//! Sharpened upper bound for `P{X <= k}`.
//!
//! With `α = (k+1)/n` and `S = S_n - S_{k+1} - S_{n-k-1}`, the defect
//!
//! ```text
//! δ(p) = P{X <= k} - Φ(a(p) √n) = P{X <= k} - C(k+1)
//! ```
//!
//! satisfies `δ(p) = -∫_0^p f(z) g(z) dz` with `f(z) = φ(a(z)√n) √n / z` and
//! the strictly decreasing factor
//!
//! ```text
//! g(z) = e^S sqrt(α/(1-α)) - sqrt((z-α)² / (2 (1-z)² B(z))).
//! ```
//!
//! `g` changes sign once, at `p₀ < α`. Because `∫_z^1 f = e^{-S} sqrt((1-α)/α)
//! P_z{X <= k}`, freezing `|g|` at any point `z` of the integration range
//! gives a valid negative upper bound on `δ(p)`:
//!
//! * `p >= p₀`: `δ(p) <= -h(z) C_{n,z}(k)` for every `z ∈ (p, 1)`,
//! * `p < p₀`: `δ(p) <= -h(z) (1 - C_{n,z}(k+1))` for every `z ∈ (0, p)`,
//!
//! where `h(z) = |g(z)| e^{-S} sqrt((1-α)/α)`. The search for the best `z`
//! affects only tightness.

use crate::bounds::bound_value_unchecked;
use crate::entropy::{check_open_unit, count_entropy, quadratic_ratio, Alpha, BinomialParams};
use crate::error::{domain, Error, Result};
use crate::quadrature::integrate;
use crate::special_fn::{stirling_correction, FRAC_1_SQRT_2PI};

/// Bisection tolerance on `|g(p₀)|`.
pub const P0_TOLERANCE: f64 = 1e-12;

/// Points in the coarse search grid of [`delta_refined_bound`].
const GRID_POINTS: usize = 256;
/// Relative width at which golden-section polishing stops.
const GOLDEN_TOL: f64 = 1e-8;
const QUAD_MAX_SEGMENTS: usize = 4000;

/// Precomputed `(n, k, α, S)` and the sign change `p₀` of `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineContext {
    n: u64,
    k: u64,
    alpha: Alpha,
    stirling_corr: f64,
    /// `e^S sqrt(α/(1-α))`, the limit of `g` at 0.
    g_top: f64,
    p0: f64,
}

/// Which of the two bound forms produced a [`DeltaBound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    BelowP0,
    AtOrAboveP0,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::BelowP0 => "below_p0",
            Branch::AtOrAboveP0 => "at_or_above_p0",
        }
    }
}

/// Upper bound on `δ(p)`; always `<= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaBound {
    pub p: f64,
    pub bound: f64,
    pub branch: Branch,
    /// Point `z` whose frozen factor produced `bound`.
    pub witness: f64,
    /// `ln |bound|`; finite even when `bound` underflows to zero.
    pub log_magnitude: f64,
}

/// The refined upper bound on `P{X <= k}` with its complement, in linear and
/// log form like [`crate::bounds::BoundValue`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedUpper {
    pub cdf: f64,
    pub sf: f64,
    pub log_cdf: f64,
    pub log_sf: f64,
    pub delta: DeltaBound,
}

impl RefineContext {
    /// Requires `n >= 2` and `0 <= k <= n - 2`. Locates `p₀` eagerly.
    pub fn new(n: u64, k: u64) -> Result<Self> {
        Self::with_tolerance(n, k, P0_TOLERANCE)
    }

    pub fn with_tolerance(n: u64, k: u64, p0_tol: f64) -> Result<Self> {
        if n < 2 || k > n - 2 {
            return domain(format!(
                "refinement needs n >= 2 and 0 <= k <= n - 2, got n = {n}, k = {k}"
            ));
        }
        let stirling_corr = stirling_correction(n, k)?;
        let alpha = Alpha::from_counts(k + 1, n)?;
        let g_top = stirling_corr.exp() * ((k + 1) as f64 / (n - k - 1) as f64).sqrt();
        let mut ctx = Self {
            n,
            k,
            alpha,
            stirling_corr,
            g_top,
            p0: f64::NAN,
        };
        ctx.p0 = ctx.locate_p0(p0_tol)?;
        Ok(ctx)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn stirling_corr(&self) -> f64 {
        self.stirling_corr
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// `g(z)` without argument checks.
    fn g(&self, z: f64) -> f64 {
        self.g_top - quadratic_ratio(self.alpha.value(), z).sqrt() / (1.0 - z)
    }

    /// `h(z) = |g(z)| / g(0+)`.
    fn factor(&self, z: f64) -> f64 {
        (self.g(z) / self.g_top).abs()
    }

    /// `f(z) g(z)`, the integrand of `δ`.
    fn integrand(&self, z: f64) -> f64 {
        if z <= 0.0 || z >= 1.0 {
            return 0.0;
        }
        let nf = self.n as f64;
        let f =
            (-nf * count_entropy(self.k + 1, self.n, z)).exp() * FRAC_1_SQRT_2PI * nf.sqrt() / z;
        if f == 0.0 {
            0.0
        } else {
            f * self.g(z)
        }
    }

    fn locate_p0(&self, tol: f64) -> Result<f64> {
        const EPS: f64 = 1e-15;
        let (mut lo, mut hi) = (EPS, 1.0 - EPS);
        let (g_lo, g_hi) = (self.g(lo), self.g(hi));
        if !(g_lo > 0.0 && g_hi < 0.0) {
            return Err(Error::Internal(format!(
                "g does not change sign on ({lo}, {hi}) for n = {}, k = {}: g = {g_lo}, {g_hi}",
                self.n, self.k
            )));
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = self.g(mid);
            if gm.abs() <= tol {
                return Ok(mid);
            }
            if gm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Adjacent floats: take the endpoint closer to the root.
        Ok(if self.g(lo).abs() <= self.g(hi).abs() {
            lo
        } else {
            hi
        })
    }
}

/// The decreasing factor `g(z)`.
pub fn g_function(z: f64, ctx: &RefineContext) -> Result<f64> {
    check_open_unit(z, "z")?;
    Ok(ctx.g(z))
}

/// The sign change of `g`, already computed by [`RefineContext::new`].
pub fn find_p0(ctx: &RefineContext) -> f64 {
    ctx.p0
}

/// Candidate points in `(lo, hi)`: half of them geometrically clustered
/// towards each endpoint.
fn search_grid(lo: f64, hi: f64) -> Vec<f64> {
    let width = hi - lo;
    let half = GRID_POINTS / 2;
    let mut pts = Vec::with_capacity(GRID_POINTS);
    for i in 0..half {
        // Offsets from 1e-12·width up to 0.5·width.
        let t = i as f64 / (half - 1) as f64;
        let d = width * 0.5 * 10f64.powf(-12.0 * (1.0 - t));
        pts.push(lo + d);
        pts.push(hi - d);
    }
    pts.retain(|&z| z > lo && z < hi && z > 0.0 && z < 1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Maximizes `objective` over `(lo, hi)`: coarse grid, then golden-section
/// polish inside the cell around the best grid point.
fn maximize(lo: f64, hi: f64, objective: impl Fn(f64) -> f64) -> (f64, f64) {
    let pts = search_grid(lo, hi);
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    let mut best_idx = 0;
    for (i, &z) in pts.iter().enumerate() {
        let v = objective(z);
        if v > best.1 {
            best = (z, v);
            best_idx = i;
        }
    }
    if pts.is_empty() {
        let z = 0.5 * (lo + hi);
        return (z, objective(z));
    }
    if best.1 == f64::NEG_INFINITY {
        return (pts[pts.len() / 2], f64::NEG_INFINITY);
    }
    let mut a = if best_idx == 0 { lo } else { pts[best_idx - 1] };
    let mut b = if best_idx + 1 == pts.len() {
        hi
    } else {
        pts[best_idx + 1]
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c);
    let mut fd = objective(d);
    for _ in 0..200 {
        if (b - a) <= GOLDEN_TOL * a.abs().max(b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
        for (z, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (z, v);
            }
        }
    }
    best
}

/// Upper bound on `δ(p)` from the frozen-factor forms described in the
/// module documentation.
pub fn delta_refined_bound(p: f64, ctx: &RefineContext) -> Result<DeltaBound> {
    check_open_unit(p, "p")?;
    let (n, k) = (ctx.n, ctx.k);
    let (branch, (witness, log_value)) = if p >= ctx.p0 {
        let obj = |z: f64| ctx.factor(z).ln() + bound_value_unchecked(n, z, k).log_cdf;
        (Branch::AtOrAboveP0, maximize(p, 1.0, obj))
    } else {
        let obj = |z: f64| ctx.factor(z).ln() + bound_value_unchecked(n, z, k + 1).log_sf;
        (Branch::BelowP0, maximize(0.0, p, obj))
    };
    let log_magnitude = if log_value.is_nan() {
        f64::NEG_INFINITY
    } else {
        log_value
    };
    let magnitude = log_magnitude.exp();
    Ok(DeltaBound {
        p,
        bound: if magnitude > 0.0 { -magnitude } else { 0.0 },
        branch,
        witness,
        log_magnitude,
    })
}

/// `δ(p)` by adaptive quadrature. A diagnostic: the error is estimated, not
/// certified.
///
/// Integrates over whichever of `(0, p)` or `(p, 1)` avoids cancelling
/// contributions from both sides of `p₀`.
pub fn delta_numeric(p: f64, ctx: &RefineContext, rel_tol: f64) -> Result<f64> {
    check_open_unit(p, "p")?;
    if rel_tol.is_nan() || rel_tol < 1e-12 {
        return domain(format!("rel_tol must be at least 1e-12, got {rel_tol}"));
    }
    let f = |z: f64| ctx.integrand(z);
    let q = if p < ctx.p0 {
        let q = integrate(f, 0.0, p, 1e-15, rel_tol, QUAD_MAX_SEGMENTS)?;
        -q.value
    } else {
        integrate(f, p, 1.0, 1e-15, rel_tol, QUAD_MAX_SEGMENTS)?.value
    };
    Ok(q)
}

/// `C(k+1) + δ-bound`, kept inside `[C(k), C(k+1)]`.
pub fn refined_upper(params: &BinomialParams, k: u64) -> Result<f64> {
    Ok(refined_upper_value(params, k)?.cdf)
}

/// [`refined_upper`] with the complement and logs.
///
/// The sum is formed in the log domain of the smaller tail of `C(k+1)`, so
/// the refinement survives when `C(k+1)` rounds to 0 or 1. The result is
/// then moved outward by a few units of rounding so that it stays an upper
/// bound despite the rounding in its constituents.
pub fn refined_upper_value(params: &BinomialParams, k: u64) -> Result<RefinedUpper> {
    let ctx = RefineContext::new(params.n(), k)?;
    refined_upper_with(params.p(), &ctx)
}

fn log_pad(x: f64) -> f64 {
    8.0 * f64::EPSILON * (1.0 + x.abs())
}

pub(crate) fn refined_upper_with(p: f64, ctx: &RefineContext) -> Result<RefinedUpper> {
    let upper = bound_value_unchecked(ctx.n, p, ctx.k + 1);
    let lower = bound_value_unchecked(ctx.n, p, ctx.k);
    let delta = delta_refined_bound(p, ctx)?;
    let lb = delta.log_magnitude;
    let (log_cdf, log_sf) = if upper.upper_half() {
        // 1 - refined = (1 - C(k+1)) + |bound|
        let (hi, lo) = if upper.log_sf >= lb {
            (upper.log_sf, lb)
        } else {
            (lb, upper.log_sf)
        };
        let mut log_sf = hi + (lo - hi).exp().ln_1p();
        log_sf -= log_pad(log_sf);
        let log_sf = log_sf.max(upper.log_sf).min(lower.log_sf);
        (log_sf.exp().neg_ln_1p(), log_sf)
    } else {
        // refined = C(k+1) (1 - |bound| / C(k+1))
        let mut log_cdf = upper.log_cdf + (-(lb - upper.log_cdf).exp()).ln_1p();
        log_cdf += log_pad(log_cdf);
        let log_cdf = log_cdf.min(upper.log_cdf).max(lower.log_cdf);
        (log_cdf, log_cdf.exp().neg_ln_1p())
    };
    let (cdf, sf) = if upper.upper_half() {
        let sf = log_sf.exp();
        let mut cdf = 1.0 - sf;
        // 1 - cdf is exact here; round up if the subtraction rounded down.
        if 1.0 - cdf > sf {
            cdf = cdf.next_up();
        }
        (cdf, sf)
    } else {
        (log_cdf.exp(), -log_cdf.exp_m1())
    };
    Ok(RefinedUpper {
        cdf: cdf.min(upper.cdf).max(lower.cdf),
        sf: sf.max(upper.sf).min(lower.sf),
        log_cdf,
        log_sf,
        delta,
    })
}

trait NegLn1p {
    /// `ln(1 - self)`.
    fn neg_ln_1p(self) -> f64;
}

impl NegLn1p for f64 {
    fn neg_ln_1p(self) -> f64 {
        (-self).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::c_bound;
    use crate::oracle::ExactBinomial;
    use crate::special_fn::normal_cdf;

    fn ctx(n: u64, k: u64) -> RefineContext {
        RefineContext::new(n, k).unwrap()
    }

    #[test]
    fn context_invariants() {
        for (n, k) in [
            (2u64, 0u64),
            (10, 4),
            (20, 9),
            (100, 0),
            (100, 98),
            (1000, 317),
        ] {
            let c = ctx(n, k);
            assert_eq!(c.alpha().value(), (k + 1) as f64 / n as f64);
            assert!(c.stirling_corr() < 0.0);
            assert!(
                g_function(c.p0(), &c).unwrap().abs() <= 1e-12,
                "n {n} k {k}"
            );
            assert!(c.p0() < c.alpha().value());
        }
        assert!(RefineContext::new(10, 9).is_err());
        assert!(RefineContext::new(1, 0).is_err());
    }

    #[test]
    fn g_at_alpha_is_the_removable_limit() {
        let c = ctx(10, 4);
        let s = c.stirling_corr();
        let want = (s.exp() - 1.0) * (0.5f64 / 0.5).sqrt();
        let at = g_function(0.5, &c).unwrap();
        assert!((at - want).abs() < 1e-15);
        assert!(at < 0.0);
        for dz in [1e-6, -1e-6] {
            assert!((g_function(0.5 + dz, &c).unwrap() - want).abs() < 1e-5);
        }
    }

    #[test]
    fn g_near_zero() {
        let c = ctx(10, 4);
        let top = c.stirling_corr().exp();
        // Direct evaluation of the subtrahend sqrt((z-α)²/(2(1-z)²B(z))).
        let direct = |z: f64| {
            let b = 0.5 * (0.5 / z).ln() + 0.5 * (0.5 / (1.0 - z)).ln();
            top - ((z - 0.5).powi(2) / (2.0 * (1.0 - z).powi(2) * b)).sqrt()
        };
        for z in [1e-8, 1e-30, 1e-300] {
            let g = g_function(z, &c).unwrap();
            assert!((g - direct(z)).abs() < 1e-14, "z {z}");
        }
        // The approach to the limit is slow, like 1/sqrt(ln(1/z)).
        let gaps: Vec<f64> = [1e-8, 1e-30, 1e-300]
            .iter()
            .map(|&z| top - g_function(z, &c).unwrap())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] > 0.0);
        assert!(g_function(0.0, &c).is_err());
        assert!(g_function(1.0, &c).is_err());
    }

    #[test]
    fn g_decreasing_on_dense_grids() {
        for (n, k) in [
            (20u64, 9u64),
            (2, 0),
            (10, 0),
            (10, 8),
            (50, 25),
            (200, 0),
            (200, 198),
            (1000, 10),
        ] {
            let c = ctx(n, k);
            let mut prev = f64::INFINITY;
            for i in 1..10_000 {
                let z = i as f64 / 10_000.0;
                let g = g_function(z, &c).unwrap();
                assert!(g < prev, "n {n} k {k} z {z}");
                prev = g;
            }
        }
    }

    #[test]
    fn p0_root_sandwich_and_stability() {
        for (n, k) in [(10u64, 4u64), (20, 9), (200, 3), (200, 190)] {
            let c = ctx(n, k);
            let p0 = find_p0(&c);
            assert!(g_function(p0 - 1e-9, &c).unwrap() > 0.0);
            assert!(g_function(p0 + 1e-9, &c).unwrap() < 0.0);
            let tight = RefineContext::with_tolerance(n, k, 1e-14).unwrap();
            assert!((tight.p0() - p0).abs() <= 1e-11);
        }
        assert!(find_p0(&ctx(10, 4)) < 0.5);
    }

    #[test]
    fn refined_example() {
        let c = ctx(10, 4);
        let db = delta_refined_bound(0.5, &c).unwrap();
        assert!(db.bound < 0.0);
        assert_eq!(db.branch, Branch::AtOrAboveP0);
        let params = BinomialParams::new(10, 0.5).unwrap();
        let upper = c_bound(&params, 5).unwrap();
        assert!(upper + db.bound >= 0.376_953_125);
        let r = refined_upper(&params, 4).unwrap();
        assert!(r < upper && r >= 0.376_953_125);
    }

    #[test]
    fn delta_numeric_example() {
        let c = ctx(10, 4);
        let d = delta_numeric(0.5, &c, 1e-12).unwrap();
        let want = 0.376_953_125 - normal_cdf(0.0);
        assert!((d - want).abs() < 1e-13, "{d} vs {want}");
    }

    #[test]
    fn delta_vanishes_at_endpoints() {
        let c = ctx(20, 9);
        assert!(delta_numeric(1e-9, &c, 1e-10).unwrap().abs() < 1e-12);
        assert!(delta_numeric(1.0 - 1e-9, &c, 1e-10).unwrap().abs() < 1e-12);
        assert!(delta_numeric(0.5, &c, 1e-13).is_err());
    }

    #[test]
    fn numeric_below_bound_below_zero() {
        let c = ctx(20, 9);
        let mut prev: Option<f64> = None;
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let d = delta_numeric(p, &c, 1e-10).unwrap();
            let b = delta_refined_bound(p, &c).unwrap().bound;
            assert!(d <= b && b <= 0.0, "p {p}: {d} {b}");
            assert!(d < 0.0);
            if let Some(prev) = prev {
                if p <= c.p0() {
                    assert!(d < prev, "p {p}");
                } else if p - 0.01 >= c.p0() {
                    assert!(d > prev, "p {p}");
                }
            }
            prev = Some(d);
        }
    }

    #[test]
    fn delta_numeric_matches_oracle() {
        for (n, k) in [(10u64, 0u64), (20, 9), (50, 48), (100, 30)] {
            let c = ctx(n, k);
            for i in 1..20 {
                let p = i as f64 / 20.0;
                let law = ExactBinomial::from_f64(n, p).unwrap();
                let params = BinomialParams::new(n, p).unwrap();
                let want = law.cdf(k).to_f64() - c_bound(&params, k + 1).unwrap();
                let got = delta_numeric(p, &c, 1e-10).unwrap();
                assert!(
                    (got - want).abs() <= 1e-12f64.max(1e-8 * want.abs()),
                    "n {n} k {k} p {p}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn refined_upper_small_sweep() {
        for n in [2u64, 5, 17, 40] {
            for i in 1..40 {
                let p = i as f64 / 40.0;
                let law = ExactBinomial::from_f64(n, p).unwrap();
                let params = BinomialParams::new(n, p).unwrap();
                for k in 0..=n - 2 {
                    let r = refined_upper(&params, k).unwrap();
                    assert!(r <= c_bound(&params, k + 1).unwrap());
                    assert!(law.cdf(k).cmp_f64(r).is_le(), "n {n} p {p} k {k}");
                }
            }
        }
    }
}
