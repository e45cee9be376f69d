//! Verification sweeps: every inequality the crate promises, checked case by
//! case against the exact oracle.
//!
//! Comparisons are made in the log domain of whichever tail is smaller, so
//! that upper-tail values near 1 are compared at full relative precision
//! rather than after rounding to 1.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{bound_value_unchecked, bracket_quantile, BoundValue};
use crate::entropy::BinomialParams;
use crate::error::Result;
use crate::oracle::{exact_quantile, ExactBinomial, ExactProb, DEFAULT_EXACT_LIMIT};
use crate::refine::{refined_upper_with, RefineContext};

/// Relative tolerance for the boundary equalities at `k = 0` and `k = n-1`.
pub const EQUALITY_TOL: f64 = 1e-12;
/// Absolute tolerance of the complement identity.
pub const COMPLEMENT_TOL: f64 = 1e-14;

/// Deliberate defects used to test the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Compare the lower bound with the inequality reversed.
    FlipLowerBound,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n_min: u64,
    pub n_max: u64,
    pub p_grid: Vec<f64>,
    pub seed: u64,
    /// Random `(n, p, q)` triples for the quantile check.
    pub quantile_cases: usize,
    pub refine: bool,
    pub fault: Option<Fault>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_min: 1,
            n_max: 200,
            p_grid: (1..100).map(|i| i as f64 / 100.0).collect(),
            seed: 0,
            quantile_cases: 1000,
            refine: false,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Sandwich,
    Gap,
    Complement,
    Monotone,
    Quantile,
    Refine,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::Sandwich => "sandwich",
            Check::Gap => "gap",
            Check::Complement => "complement",
            Check::Monotone => "monotone",
            Check::Quantile => "quantile",
            Check::Refine => "refine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub n: u64,
    pub p: f64,
    pub k: u64,
    pub check: Check,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckSummary {
    pub check: Check,
    pub cases: u64,
    pub failed: u64,
}

/// Tightness of the refined upper bound; reported, never asserted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RefineStats {
    /// Cases with `1 <= k <= n-2`.
    pub interior: u64,
    /// Interior cases where the refined bound is strictly below `C(k+1)`.
    pub tightened: u64,
    /// Mean of `(C(k+1) - refined) / (C(k+1) - F(k))` over interior cases
    /// where the denominator is positive.
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Individual checks evaluated; one `(n, p, k)` point feeds several.
    pub cases_total: u64,
    pub cases_failed: u64,
    /// Largest `F(k) - C(k)`.
    pub worst_gap: f64,
    /// Largest `C(k+1) - F(k)`.
    pub worst_slack: f64,
    pub checks: Vec<CheckSummary>,
    pub refine: Option<RefineStats>,
    /// Sorted by `(n, p, k, check)`.
    pub failures: Vec<Failure>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.cases_failed == 0
    }
}

/// Exact `ln F(k)` and `ln(1 - F(k))`, and which one is accurate in float.
#[derive(Debug, Clone, Copy)]
struct ExactValue {
    ln_cdf: f64,
    ln_sf: f64,
    upper_half: bool,
    cdf: f64,
}

fn exact_value(cdf: &ExactProb) -> ExactValue {
    let sf = cdf.complement();
    let twice = cdf.numerator() * 2u32;
    ExactValue {
        ln_cdf: cdf.ln(),
        ln_sf: sf.ln(),
        upper_half: &twice > cdf.denominator(),
        cdf: cdf.to_f64(),
    }
}

/// Orders bound value `c` relative to the exact value `e`, using the tail
/// that is small for `e`. Returns `Less` when `c < F`.
fn cmp_bound(c: &BoundValue, e: &ExactValue) -> Ordering {
    if e.upper_half {
        // Larger sf means smaller cdf.
        e.ln_sf.total_cmp(&c.log_sf)
    } else {
        c.log_cdf.total_cmp(&e.ln_cdf)
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

struct Recorder {
    report: SweepReport,
}

impl Recorder {
    fn new() -> Self {
        let checks = [
            Check::Sandwich,
            Check::Gap,
            Check::Complement,
            Check::Monotone,
            Check::Quantile,
            Check::Refine,
        ]
        .into_iter()
        .map(|check| CheckSummary {
            check,
            cases: 0,
            failed: 0,
        })
        .collect();
        Self {
            report: SweepReport {
                cases_total: 0,
                cases_failed: 0,
                worst_gap: 0.0,
                worst_slack: 0.0,
                checks,
                refine: None,
                failures: Vec::new(),
            },
        }
    }

    fn record(
        &mut self,
        n: u64,
        p: f64,
        k: u64,
        check: Check,
        ok: bool,
        detail: impl FnOnce() -> String,
    ) {
        self.report.cases_total += 1;
        let summary = &mut self.report.checks[check as usize];
        summary.cases += 1;
        if !ok {
            summary.failed += 1;
            self.report.cases_failed += 1;
            self.report.failures.push(Failure {
                n,
                p,
                k,
                check,
                detail: detail(),
            });
        }
    }

    fn finish(mut self) -> SweepReport {
        self.report.checks.retain(|c| c.cases > 0);
        self.report.failures.sort_by(|a, b| {
            a.n.cmp(&b.n)
                .then(a.p.total_cmp(&b.p))
                .then(a.k.cmp(&b.k))
                .then(a.check.cmp(&b.check))
        });
        self.report
    }
}

/// Sandwich, gap, complement and monotonicity checks for one `(n, p)`.
fn check_law(rec: &mut Recorder, n: u64, p: f64, law: &ExactBinomial, fault: Option<Fault>) {
    let values: Vec<BoundValue> = (0..=n).map(|k| bound_value_unchecked(n, p, k)).collect();
    let q = 1.0 - p;
    let mut prev_exact: Option<ExactValue> = None;
    for k in 0..n {
        let exact = exact_value(&law.cdf(k));
        let (lower, upper) = (&values[k as usize], &values[k as usize + 1]);

        // Sandwich: C(k) <= F(k) <= C(k+1), with the boundary equalities.
        let lower_ok = if k == 0 {
            close(lower.log_cdf, exact.ln_cdf, EQUALITY_TOL)
        } else {
            let ord = cmp_bound(lower, &exact);
            match fault {
                Some(Fault::FlipLowerBound) => ord == Ordering::Greater,
                None => ord == Ordering::Less,
            }
        };
        let upper_ok = if k == n - 1 {
            close(upper.log_sf, exact.ln_sf, EQUALITY_TOL)
        } else {
            cmp_bound(upper, &exact) == Ordering::Greater
        };
        rec.record(n, p, k, Check::Sandwich, lower_ok && upper_ok, || {
            format!(
                "lower {:e} (ln {:e}, ln sf {:e}), exact {:e} (ln {:e}, ln sf {:e}), upper {:e} (ln {:e}, ln sf {:e})",
                lower.cdf, lower.log_cdf, lower.log_sf, exact.cdf, exact.ln_cdf, exact.ln_sf,
                upper.cdf, upper.log_cdf, upper.log_sf
            )
        });
        rec.report.worst_gap = rec.report.worst_gap.max(exact.cdf - lower.cdf);
        rec.report.worst_slack = rec.report.worst_slack.max(upper.cdf - exact.cdf);

        // Gap: F(k) - C(k) < P{X = k}, equivalently C(k) > F(k-1), with
        // F(-1) = 0.
        let gap_ok = match &prev_exact {
            None => lower.log_cdf > f64::NEG_INFINITY,
            Some(prev) => cmp_bound(lower, prev) == Ordering::Greater,
        };
        rec.record(n, p, k, Check::Gap, gap_ok, || {
            format!(
                "gap {:e} not below pmf {:e}",
                exact.cdf - lower.cdf,
                law.pmf(k).to_f64()
            )
        });
        prev_exact = Some(exact);

        // Complement: C_{n,p}(k) + C_{n,1-p}(n-k) = 1.
        let mirror = bound_value_unchecked(n, q, n - k);
        let residual = lower.cdf + mirror.cdf - 1.0;
        rec.record(
            n,
            p,
            k,
            Check::Complement,
            residual.abs() <= COMPLEMENT_TOL,
            || format!("C(k) + C'(n-k) - 1 = {residual:e}"),
        );
    }

    // C(k) strictly increasing over 0..=n, except that C(0) = 1 - p = C(1)
    // when n = 1.
    for k in 0..n {
        let (a, b) = (&values[k as usize], &values[k as usize + 1]);
        let ok = if n == 1 {
            close(a.log_sf, b.log_sf, EQUALITY_TOL)
        } else if a.upper_half() || b.upper_half() {
            a.log_sf > b.log_sf
        } else {
            a.log_cdf < b.log_cdf
        };
        rec.record(n, p, k, Check::Monotone, ok, || {
            format!(
                "C(k) = {:e} (ln sf {:e}), C(k+1) = {:e} (ln sf {:e})",
                a.cdf, a.log_sf, b.cdf, b.log_sf
            )
        });
    }
}

fn check_refine(
    rec: &mut Recorder,
    stats: &mut (RefineStats, f64, u64),
    n: u64,
    p: f64,
    law: &ExactBinomial,
    contexts: &[RefineContext],
) {
    for (k, ctx) in contexts.iter().enumerate() {
        let k = k as u64;
        let upper = bound_value_unchecked(n, p, k + 1);
        let exact = exact_value(&law.cdf(k));
        match refined_upper_with(p, ctx) {
            Ok(r) => {
                let refined = BoundValue {
                    cdf: r.cdf,
                    sf: r.sf,
                    log_cdf: r.log_cdf,
                    log_sf: r.log_sf,
                };
                let below_upper = if upper.upper_half() {
                    r.log_sf >= upper.log_sf
                } else {
                    r.log_cdf <= upper.log_cdf
                };
                let ok = below_upper && cmp_bound(&refined, &exact) != Ordering::Less;
                rec.record(n, p, k, Check::Refine, ok, || {
                    format!(
                        "refined {:e} (ln sf {:e}), upper {:e} (ln sf {:e}), exact {:e} (ln sf {:e})",
                        r.cdf, r.log_sf, upper.cdf, upper.log_sf, exact.cdf, exact.ln_sf
                    )
                });
                if k >= 1 {
                    stats.0.interior += 1;
                    // Tightening measured in the tail that is small for C(k+1).
                    let (gain, room) = if upper.upper_half() {
                        (
                            (r.log_sf - upper.log_sf).exp_m1(),
                            (exact.ln_sf - upper.log_sf).exp_m1(),
                        )
                    } else {
                        (
                            -(r.log_cdf - upper.log_cdf).exp_m1(),
                            -(exact.ln_cdf - upper.log_cdf).exp_m1(),
                        )
                    };
                    if gain > 0.0 {
                        stats.0.tightened += 1;
                    }
                    if room > 0.0 {
                        stats.1 += gain / room;
                        stats.2 += 1;
                    }
                }
            }
            Err(e) => rec.record(n, p, k, Check::Refine, false, || e.to_string()),
        }
    }
}

/// Random `(n, p, q)` triples: the exact quantile must fall in the bracket.
fn check_quantiles(rec: &mut Recorder, n_min: u64, n_max: u64, cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let n = rng.gen_range(n_min..=n_max);
        let p: f64 = rng.gen_range(f64::EPSILON..1.0);
        let q: f64 = rng.gen_range(f64::EPSILON..1.0);
        let outcome = BinomialParams::new(n, p).and_then(|params| {
            let bracket = bracket_quantile(&params, q)?;
            let exact = exact_quantile(n, &ExactProb::from_f64(p)?, &ExactProb::from_f64(q)?)?;
            Ok((bracket, exact))
        });
        match outcome {
            Ok((bracket, exact)) => rec.record(
                n,
                p,
                exact,
                Check::Quantile,
                bracket.contains(exact),
                || {
                    format!(
                        "q {q:e}: bracket {{{}, {}}} misses {exact}",
                        bracket.k_low, bracket.k_high
                    )
                },
            ),
            Err(e) => rec.record(n, p, 0, Check::Quantile, false, || format!("q {q:e}: {e}")),
        }
    }
}

/// Runs every sweep selected by `config`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    if config.n_min == 0 || config.n_min > config.n_max {
        return crate::error::domain(format!(
            "need 1 <= n_min <= n_max, got {}..{}",
            config.n_min, config.n_max
        ));
    }
    if config.n_max > DEFAULT_EXACT_LIMIT {
        return Err(crate::error::Error::Capacity {
            n: config.n_max,
            limit: DEFAULT_EXACT_LIMIT,
        });
    }
    for &p in &config.p_grid {
        BinomialParams::new(1, p)?;
    }
    let mut rec = Recorder::new();
    let mut stats = (RefineStats::default(), 0.0, 0u64);
    for n in config.n_min..=config.n_max {
        let contexts: Vec<RefineContext> = if config.refine && n >= 2 {
            (0..=n - 2)
                .map(|k| RefineContext::new(n, k))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        for &p in &config.p_grid {
            let law = ExactBinomial::from_f64(n, p)?;
            check_law(&mut rec, n, p, &law, config.fault);
            if config.refine {
                check_refine(&mut rec, &mut stats, n, p, &law, &contexts);
            }
        }
    }
    if config.quantile_cases > 0 {
        check_quantiles(
            &mut rec,
            config.n_min,
            config.n_max,
            config.quantile_cases,
            config.seed,
        );
    }
    if config.refine {
        let (mut s, sum, count) = stats;
        s.mean_ratio = if count > 0 { sum / count as f64 } else { 0.0 };
        rec.report.refine = Some(s);
    }
    Ok(rec.finish())
}
