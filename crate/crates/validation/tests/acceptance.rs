//! Acceptance criteria, one line of output each.
//!
//! Runs as a plain binary (no libtest harness) so the summary is printed
//! even when output capture is on. Exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use binom_bounds::input::parse_grid;
use binom_bounds::oracle::{exact_quantile, ln_cdf_beta, ExactProb};
use binom_bounds::refine::refined_upper_value;
use binom_bounds::special_fn::{std_normal_cdf, std_normal_quantile, stirling_remainder};
use binom_bounds::verify::{run_sweep, Check, SweepConfig, SweepReport};
use binom_bounds::{
    bound_value, bracket_quantile, cdf_beta, cdf_bounds, delta_numeric, delta_refined_bound,
    log_c_bound, BinomialParams, ExactBinomial, RefineContext,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn failed(report: &SweepReport, check: Check) -> (u64, u64, String) {
    let summary = report.checks.iter().find(|c| c.check == check);
    let (cases, bad) = summary.map_or((0, 0), |c| (c.cases, c.failed));
    let first = report
        .failures
        .iter()
        .find(|f| f.check == check)
        .map(|f| format!("; first n={} p={} k={}: {}", f.n, f.p, f.k, f.detail))
        .unwrap_or_default();
    (cases, bad, first)
}

/// Criteria 1-3 share one sweep.
struct MainSweep {
    report: SweepReport,
    elapsed: Duration,
}

fn main_sweep() -> MainSweep {
    let grid: Vec<f64> = parse_grid("0.01:0.99:0.01")
        .expect("grid")
        .iter()
        .map(|p| p.value)
        .collect();
    assert_eq!(grid.len(), 99);
    let config = SweepConfig {
        n_min: 1,
        n_max: 200,
        p_grid: grid,
        seed: SEED,
        quantile_cases: 0,
        refine: false,
        fault: None,
    };
    let start = Instant::now();
    let report = run_sweep(&config).expect("sweep");
    MainSweep {
        report,
        elapsed: start.elapsed(),
    }
}

fn criterion_1(s: &MainSweep) -> Outcome {
    let (cases, bad, first) = failed(&s.report, Check::Sandwich);
    let (mono_cases, mono_bad, mono_first) = failed(&s.report, Check::Monotone);
    let fast = s.elapsed < Duration::from_secs(60);
    outcome(
        bad == 0 && mono_bad == 0 && fast && cases == 99 * 20_100,
        format!(
            "{cases} (n,p,k) cases, {bad} sandwich failures, {mono_bad}/{mono_cases} monotonicity failures, sweep {:.1} s{first}{mono_first}",
            s.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(s: &MainSweep) -> Outcome {
    let (cases, bad, first) = failed(&s.report, Check::Gap);
    outcome(
        bad == 0 && cases > 0,
        format!(
            "{cases} cases, {bad} with F(k) - C(k) >= pmf(k), worst gap {:e}{first}",
            s.report.worst_gap
        ),
    )
}

fn criterion_3(s: &MainSweep) -> Outcome {
    let (cases, bad, first) = failed(&s.report, Check::Complement);
    outcome(
        bad == 0 && cases > 0,
        format!("{cases} cases, {bad} beyond 1e-14{first}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut misses = Vec::new();
    let cases = 10_000;
    for _ in 0..cases {
        let n: u64 = rng.gen_range(1..=2000);
        let p: f64 = rng.gen_range(f64::EPSILON..1.0);
        let q: f64 = rng.gen_range(f64::EPSILON..1.0);
        let params = BinomialParams::new(n, p).unwrap();
        let bracket = bracket_quantile(&params, q).unwrap();
        let exact = exact_quantile(
            n,
            &ExactProb::from_f64(p).unwrap(),
            &ExactProb::from_f64(q).unwrap(),
        )
        .unwrap();
        let consecutive = bracket.k_high == bracket.k_low + 1 || bracket.k_high == bracket.k_low;
        if !bracket.contains(exact) || !consecutive {
            misses.push(format!(
                "n={n} p={p} q={q}: {{{}, {}}} vs {exact}",
                bracket.k_low, bracket.k_high
            ));
        }
    }
    outcome(
        misses.is_empty(),
        format!(
            "{cases} random triples, {} outside bracket{}",
            misses.len(),
            first_of(&misses)
        ),
    )
}

fn first_of(items: &[String]) -> String {
    items
        .first()
        .map(|s| format!("; first {s}"))
        .unwrap_or_default()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut bad = Vec::new();
    for n in [10u64, 100, 1000] {
        for _ in 0..20 {
            let p: f64 = rng.gen_range(0.001..0.999);
            let law = ExactBinomial::from_f64(n, p).unwrap();
            for k in 0..n {
                let exact = law.cdf(k);
                let exact_f = exact.to_f64();
                let rel = if exact_f >= 1e-290 {
                    ((cdf_beta(n, p, k).unwrap() - exact_f) / exact_f).abs()
                } else {
                    (ln_cdf_beta(n, p, k).unwrap() - exact.ln()).exp_m1().abs()
                };
                cases += 1;
                worst = worst.max(rel);
                if rel.is_nan() || rel > 1e-12 {
                    bad.push(format!("n={n} p={p} k={k}: rel {rel:e}"));
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{cases} cases, worst relative error {worst:e}, {} above 1e-12{}",
            bad.len(),
            first_of(&bad)
        ),
    )
}

fn criterion_6() -> Outcome {
    let p_grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    let mut cases = 0u64;
    let mut interior = 0u64;
    let mut tightened = 0u64;
    let mut bad = Vec::new();
    for n in [10u64, 20, 50, 100, 200] {
        let step = ((n - 1) / 40).max(1) as usize;
        for &p in &p_grid {
            let params = BinomialParams::new(n, p).unwrap();
            let law = ExactBinomial::from_f64(n, p).unwrap();
            for k in (0..=n - 2).step_by(step) {
                let r = refined_upper_value(&params, k).unwrap();
                let upper = bound_value(&params, k + 1).unwrap();
                let exact = law.cdf(k);
                let exact_ln_sf = exact.complement().ln();
                // Compare through the small tail of C(k+1).
                let (valid, tighter) = if upper.upper_half() {
                    (
                        exact_ln_sf >= r.log_sf && r.log_sf >= upper.log_sf,
                        r.log_sf > upper.log_sf,
                    )
                } else {
                    (
                        exact.ln() <= r.log_cdf && r.log_cdf <= upper.log_cdf,
                        r.log_cdf < upper.log_cdf,
                    )
                };
                let valid = valid && exact.cmp_f64(r.cdf).is_le() && r.cdf <= upper.cdf;
                cases += 1;
                if !valid {
                    bad.push(format!(
                        "n={n} p={p} k={k}: refined {:e}, upper {:e}",
                        r.cdf, upper.cdf
                    ));
                }
                if k >= 1 {
                    interior += 1;
                    tightened += u64::from(tighter);
                }
            }
        }
    }
    let share = tightened as f64 / interior as f64;
    outcome(
        bad.is_empty() && cases >= 2000 && share >= 0.95,
        format!(
            "{cases} cases, {} invalid, strictly tighter in {tightened}/{interior} interior cases ({:.2}%){}",
            bad.len(),
            100.0 * share,
            first_of(&bad)
        ),
    )
}

fn criterion_7() -> Outcome {
    let pairs = [(10u64, 4u64), (20, 9), (20, 2), (50, 10), (50, 40)];
    let p_grid: Vec<f64> = (1..=100).map(|i| (i as f64 - 0.5) / 100.0).collect();
    let mut cases = 0;
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for (n, k) in pairs {
        let ctx = RefineContext::new(n, k).unwrap();
        let mut deltas = Vec::with_capacity(p_grid.len());
        for &p in &p_grid {
            let params = BinomialParams::new(n, p).unwrap();
            let num = delta_numeric(p, &ctx, 1e-10).unwrap();
            let exact = ExactBinomial::from_f64(n, p).unwrap().cdf(k).to_f64();
            let reference = exact - bound_value(&params, k + 1).unwrap().cdf;
            let tol = 1e-10f64.max(1e-6 * reference.abs());
            let err = (num - reference).abs();
            worst = worst.max(err / tol);
            let bound = delta_refined_bound(p, &ctx).unwrap().bound;
            cases += 1;
            if err > tol {
                bad.push(format!(
                    "n={n} k={k} p={p}: numeric {num:e} vs {reference:e}"
                ));
            }
            if !(num <= bound && bound <= 0.0) {
                bad.push(format!(
                    "n={n} k={k} p={p}: numeric {num:e}, bound {bound:e}"
                ));
            }
            deltas.push((p, num));
        }
        // Decreasing before p0, increasing after.
        let p0 = ctx.p0();
        for w in deltas.windows(2) {
            let ((pa, da), (pb, db)) = (w[0], w[1]);
            let ok = if pb <= p0 {
                db < da
            } else if pa >= p0 {
                db > da
            } else {
                true
            };
            if !ok {
                bad.push(format!(
                    "n={n} k={k}: shape broken between p={pa} and p={pb} (p0 = {p0})"
                ));
            }
        }
    }
    outcome(
        bad.is_empty() && cases >= 500,
        format!(
            "{cases} cases, worst error/tolerance {worst:.3}, {} violations{}",
            bad.len(),
            first_of(&bad)
        ),
    )
}

/// `ln Φ(-x)` for large `x` from the Mills-ratio asymptotic series.
fn ln_phi_tail(x: f64) -> f64 {
    let r = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..12 {
        term *= -((2 * j - 1) as f64) * r;
        sum += term;
    }
    -0.5 * x * x - (x * (2.0 * std::f64::consts::PI).sqrt()).ln() + sum.ln()
}

/// `√(2n H(k/n, p))` from the textbook relative-entropy formula.
fn direct_argument(n: f64, k: f64, p: f64) -> f64 {
    let x = k / n;
    let h = x * (x / p).ln() + (1.0 - x) * ((1.0 - x) / (1.0 - p)).ln();
    (2.0 * n * h).sqrt()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let (n, p, k) = (1_000_000u64, 0.5, 400_000u64);
    let params = BinomialParams::new(n, p).unwrap();
    let lo = log_c_bound(&params, k).unwrap();
    let hi = log_c_bound(&params, k + 1).unwrap();
    let pair = cdf_bounds(&params, k).unwrap();
    let ln_f = ln_cdf_beta(n, p, k).unwrap();
    let width = pair.log_upper - pair.log_lower;
    let independent = ln_phi_tail(direct_argument(n as f64, (k + 1) as f64, p))
        - ln_phi_tail(direct_argument(n as f64, k as f64, p));
    let rel = ((width - independent) / independent).abs();
    let elapsed = start.elapsed();
    let pass = lo.is_finite()
        && hi.is_finite()
        && lo < hi
        && lo <= ln_f
        && ln_f <= hi
        && lo == pair.log_lower
        && hi == pair.log_upper
        && rel <= 1e-9
        && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "ln C(k) = {lo}, ln F(k) = {ln_f}, ln C(k+1) = {hi}, width {width} vs {independent} (rel {rel:e}), {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9() -> Outcome {
    // Round trip on a 1e-3 grid over [-8, 8].
    let mut worst = (0.0f64, 0.0f64);
    let mut misses = 0;
    let mut first_miss = None;
    for i in -8000..=8000 {
        let x = i as f64 / 1000.0;
        let back = std_normal_quantile(std_normal_cdf(x).unwrap());
        let err = match back {
            Ok(y) => (y - x).abs(),
            Err(_) => f64::INFINITY,
        };
        if err > worst.1 {
            worst = (x, err);
        }
        if err.is_nan() || err > 1e-10 {
            misses += 1;
            first_miss.get_or_insert(x);
        }
    }
    let mut stirling_bad = Vec::new();
    for n in 1..=1_000_000u64 {
        let s = stirling_remainder(n).unwrap().value;
        let nf = n as f64;
        if !(1.0 / (12.0 * nf + 1.0) < s && s < 1.0 / (12.0 * nf)) {
            stirling_bad.push(format!("n={n}: S_n = {s:e}"));
        }
    }
    let round_trip = misses == 0;
    outcome(
        round_trip && stirling_bad.is_empty(),
        format!(
            "round trip: {} of 16001 grid points beyond 1e-10 (first x = {}, worst {:e} at x = {}); Stirling bracket: {} failures for n in [1, 1e6]{}",
            misses,
            first_miss.map_or("none".to_string(), |x| x.to_string()),
            worst.1,
            worst.0,
            stirling_bad.len(),
            first_of(&stirling_bad)
        ),
    )
}

fn run(label: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let secs = start.elapsed().as_secs_f64();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "criterion {label}: {} [{secs:.1} s] {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn main() -> ExitCode {
    // Shares one exact sweep between criteria 1-3.
    let sweep = catch_unwind(main_sweep);
    let mut results = Vec::new();
    match &sweep {
        Ok(s) => {
            results.push(run("1 sandwich", || criterion_1(s)));
            results.push(run("2 gap below pmf", || criterion_2(s)));
            results.push(run("3 complement identity", || criterion_3(s)));
        }
        Err(_) => {
            for label in ["1 sandwich", "2 gap below pmf", "3 complement identity"] {
                results.push(run(label, || outcome(false, "sweep panicked".into())));
            }
        }
    }
    results.push(run("4 quantile bracket", criterion_4));
    results.push(run("5 oracle cross-validation", criterion_5));
    results.push(run("6 refinement validity", criterion_6));
    results.push(run("7 delta consistency", criterion_7));
    results.push(run("8 log-domain deep tail", criterion_8));
    results.push(run("9 special functions", criterion_9));
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
