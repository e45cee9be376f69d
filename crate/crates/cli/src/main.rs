//! `binom-bounds`: certified two-sided bounds for the binomial distribution
//! function, quantile brackets, and verification sweeps against the exact
//! oracle.
//!
//! Exit status: 0 success, 1 verification failure or internal error,
//! 2 usage error.

mod render;

use std::io::Write;
use std::process::ExitCode;

use binom_bounds::input::{parse_grid, parse_k_range, parse_probability, Probability};
use binom_bounds::{
    bound_value, bracket_quantile, cdf_bounds, refined_upper_value, run_sweep, BinomialParams,
    BoundValue, Error, ExactBinomial, Fault, SweepConfig, SweepReport,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use render::{
    csv_table, fmt17, json_object, json_string, text_record, text_table, Field, Format, Record,
};

const DEFAULT_GRID: &str = "0.01:0.99:0.01";

#[derive(Parser)]
#[command(
    name = "binom-bounds",
    version,
    about = "Entropy-based bounds for the binomial distribution function"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower and upper bounds C(k) <= P{X <= k} <= C(k+1).
    Bounds {
        /// Number of trials.
        #[arg(short = 'n')]
        n: u64,
        /// Success probability, decimal or a/b.
        #[arg(short = 'p', value_parser = probability)]
        p: Probability,
        /// Count, 0 <= k <= n - 1.
        #[arg(short = 'k')]
        k: u64,
        /// Also print natural logarithms.
        #[arg(long)]
        log: bool,
        /// Also print the refined upper bound.
        #[arg(long)]
        refine: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Two consecutive integers containing the q-quantile.
    Quantile {
        /// Number of trials.
        #[arg(short = 'n')]
        n: u64,
        /// Success probability, decimal or a/b.
        #[arg(short = 'p', value_parser = probability)]
        p: Probability,
        /// Level in (0, 1), decimal or a/b.
        #[arg(short = 'q', value_parser = probability)]
        q: Probability,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check the bounds against the exact oracle over a grid.
    Verify {
        /// Smallest number of trials in the sweep.
        #[arg(long, default_value_t = 1)]
        n_min: u64,
        #[arg(long, default_value_t = 200)]
        n_max: u64,
        /// start:stop:step, inclusive of stop within half a step.
        #[arg(long, default_value = DEFAULT_GRID)]
        p_grid: String,
        /// Seed for the random quantile triples.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random (n, p, q) triples for the quantile check.
        #[arg(long, default_value_t = 1000)]
        quantile_cases: usize,
        /// Include the refined upper bound.
        #[arg(long)]
        refine: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Break a check on purpose to exercise the failure path.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// One row per k: bounds, exact distribution function, pmf and gap.
    Table {
        /// Number of trials.
        #[arg(short = 'n')]
        n: u64,
        /// Success probability, decimal or a/b.
        #[arg(short = 'p', value_parser = probability)]
        p: Probability,
        /// `a` or `a:b`, within 0..=n-1. Defaults to all of it.
        #[arg(long)]
        k_range: Option<String>,
        /// Add log-domain columns.
        #[arg(long)]
        log: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipLower,
}

fn probability(s: &str) -> Result<Probability, String> {
    parse_probability(s).map_err(|e| e.to_string())
}

/// Why a command stopped.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parse(_) | Error::Capacity { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome = Result<(String, bool), Failure>;

fn params(n: u64, p: &Probability) -> Result<BinomialParams, Failure> {
    if !p.is_open_unit() {
        return Err(Failure::Usage(format!(
            "p must lie strictly between 0 and 1, got {}",
            fmt17(p.value)
        )));
    }
    Ok(BinomialParams::new(n, p.value)?)
}

fn render_one(record: Record, format: Format) -> String {
    match format {
        Format::Text => text_record(&record),
        Format::Json => json_string(&json_object(&record)),
        Format::Csv => csv_table(&[record]),
    }
}

fn cmd_bounds(n: u64, p: &Probability, k: u64, log: bool, refine: bool, format: Format) -> Outcome {
    let params = params(n, p)?;
    if k >= n {
        return Err(Failure::Usage(format!(
            "k must satisfy 0 <= k <= n - 1 = {}, got {k}",
            n - 1
        )));
    }
    let pair = cdf_bounds(&params, k)?;
    let mut rec: Record = vec![
        ("n", Field::Int(n)),
        ("p", Field::Num(params.p())),
        ("k", Field::Int(k)),
        ("lower", Field::Num(pair.lower)),
        ("upper", Field::Num(pair.upper)),
    ];
    if log {
        rec.push(("log_lower", Field::Num(pair.log_lower)));
        rec.push(("log_upper", Field::Num(pair.log_upper)));
    }
    if refine {
        // The refinement covers k <= n - 2; at k = n - 1 the plain upper
        // bound is reported unchanged.
        if k + 2 <= n {
            let r = refined_upper_value(&params, k)?;
            rec.push(("refined_upper", Field::Num(r.cdf)));
            if log {
                rec.push(("log_refined_upper", Field::Num(r.log_cdf)));
            }
            rec.push(("delta_bound", Field::Num(r.delta.bound)));
            rec.push(("branch", Field::Str(r.delta.branch.as_str().to_string())));
        } else {
            rec.push(("refined_upper", Field::Num(pair.upper)));
            if log {
                rec.push(("log_refined_upper", Field::Num(pair.log_upper)));
            }
            rec.push(("delta_bound", Field::Missing));
            rec.push(("branch", Field::Missing));
        }
    }
    Ok((render_one(rec, format), true))
}

fn cmd_quantile(n: u64, p: &Probability, q: &Probability, format: Format) -> Outcome {
    let params = params(n, p)?;
    if !q.is_open_unit() {
        return Err(Failure::Usage(format!(
            "q must lie strictly between 0 and 1, got {}",
            fmt17(q.value)
        )));
    }
    let b = bracket_quantile(&params, q.value)?;
    let rec: Record = vec![
        ("n", Field::Int(n)),
        ("p", Field::Num(params.p())),
        ("q", Field::Num(b.q)),
        ("k_low", Field::Int(b.k_low)),
        ("k_high", Field::Int(b.k_high)),
        ("c_low", Field::Num(bound_value(&params, b.k_low)?.cdf)),
        ("c_high", Field::Num(bound_value(&params, b.k_high)?.cdf)),
    ];
    Ok((render_one(rec, format), true))
}

fn cmd_table(n: u64, p: &Probability, k_range: Option<&str>, log: bool, format: Format) -> Outcome {
    let params = params(n, p)?;
    let (lo, hi) = match k_range {
        Some(s) => parse_k_range(s)?,
        None => (0, n - 1),
    };
    if hi >= n {
        return Err(Failure::Usage(format!(
            "k range must stay within 0..={}, got {lo}..={hi}",
            n - 1
        )));
    }
    // The oracle sees the probability exactly as typed.
    let law = ExactBinomial::new(n, p.exact.numerator(), p.exact.denominator())?;
    let mut rows = Vec::with_capacity((hi - lo + 1) as usize);
    for k in lo..=hi {
        let pair = cdf_bounds(&params, k)?;
        let cdf = law.cdf(k);
        let pmf = law.pmf(k);
        let mut rec: Record = vec![
            ("k", Field::Int(k)),
            ("lower", Field::Num(pair.lower)),
            ("oracle_cdf", Field::Num(cdf.to_f64())),
            ("upper", Field::Num(pair.upper)),
            ("pmf", Field::Num(pmf.to_f64())),
            ("gap", Field::Num(gap(&law, k, &bound_value(&params, k)?)?)),
        ];
        if log {
            rec.push(("log_lower", Field::Num(pair.log_lower)));
            rec.push(("log_oracle_cdf", Field::Num(cdf.ln())));
            rec.push(("log_upper", Field::Num(pair.log_upper)));
            rec.push(("log_pmf", Field::Num(pmf.ln())));
        }
        rows.push(rec);
    }
    let out = match format {
        Format::Text => text_table(&rows),
        Format::Csv => csv_table(&rows),
        Format::Json => {
            let mut map = Map::new();
            map.insert("n".into(), Value::from(n));
            map.insert("p".into(), Field::Num(params.p()).to_json());
            map.insert(
                "rows".into(),
                Value::Array(rows.iter().map(json_object).collect()),
            );
            json_string(&Value::Object(map))
        }
    };
    Ok((out, true))
}

/// `P{X <= k} - C(k)`, formed exactly from whichever tail of `C(k)` is
/// held to full relative precision. In the upper half `C(k)` itself may
/// round to 1, so the difference is taken as `(1 - C(k)) - P{X > k}`.
fn gap(law: &ExactBinomial, k: u64, lower: &BoundValue) -> Result<f64, Failure> {
    Ok(if lower.upper_half() {
        -law.sf(k).minus_f64(lower.sf)?
    } else {
        law.cdf(k).minus_f64(lower.cdf)?
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    n_min: u64,
    n_max: u64,
    p_grid: &str,
    seed: u64,
    quantile_cases: usize,
    refine: bool,
    format: Format,
    fault: Option<FaultArg>,
) -> Outcome {
    let grid = parse_grid(p_grid)?;
    if let Some(bad) = grid.iter().find(|p| !p.is_open_unit()) {
        return Err(Failure::Usage(format!(
            "grid points must lie strictly between 0 and 1, got {}",
            fmt17(bad.value)
        )));
    }
    let config = SweepConfig {
        n_min,
        n_max,
        p_grid: grid.iter().map(|p| p.value).collect(),
        seed,
        quantile_cases,
        refine,
        fault: fault.map(|FaultArg::FlipLower| Fault::FlipLowerBound),
    };
    let report = run_sweep(&config)?;
    let passed = report.passed();
    let out = match format {
        Format::Json => json_string(&verify_json(&config, p_grid, &report)),
        Format::Csv => csv_table(&verify_check_rows(&report)),
        Format::Text => verify_text(&config, p_grid, &report),
    };
    Ok((out, passed))
}

fn verify_summary(config: &SweepConfig, p_grid: &str, report: &SweepReport) -> Record {
    let mut rec: Record = vec![
        ("n_min", Field::Int(config.n_min)),
        ("n_max", Field::Int(config.n_max)),
        ("p_grid", Field::Str(p_grid.to_string())),
        ("seed", Field::Int(config.seed)),
        ("quantile_cases", Field::Int(config.quantile_cases as u64)),
        ("refine", Field::Bool(config.refine)),
        ("cases_total", Field::Int(report.cases_total)),
        ("cases_failed", Field::Int(report.cases_failed)),
        ("worst_gap", Field::Num(report.worst_gap)),
        ("worst_slack", Field::Num(report.worst_slack)),
    ];
    if let Some(r) = &report.refine {
        rec.push(("refine_interior", Field::Int(r.interior)));
        rec.push(("refine_tightened", Field::Int(r.tightened)));
        rec.push(("refine_mean_ratio", Field::Num(r.mean_ratio)));
    }
    rec
}

fn verify_check_rows(report: &SweepReport) -> Vec<Record> {
    let mut rows: Vec<Record> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                ("check", Field::Str(c.check.as_str().to_string())),
                ("cases", Field::Int(c.cases)),
                ("failed", Field::Int(c.failed)),
            ]
        })
        .collect();
    rows.push(vec![
        ("check", Field::Str("total".into())),
        ("cases", Field::Int(report.cases_total)),
        ("failed", Field::Int(report.cases_failed)),
    ]);
    rows
}

fn failure_rows(report: &SweepReport) -> Vec<Record> {
    report
        .failures
        .iter()
        .map(|f| {
            vec![
                ("n", Field::Int(f.n)),
                ("p", Field::Num(f.p)),
                ("k", Field::Int(f.k)),
                ("check", Field::Str(f.check.as_str().to_string())),
                ("detail", Field::Str(f.detail.clone())),
            ]
        })
        .collect()
}

fn verify_json(config: &SweepConfig, p_grid: &str, report: &SweepReport) -> Value {
    let Value::Object(mut map) = json_object(&verify_summary(config, p_grid, report)) else {
        unreachable!("records render as objects")
    };
    map.insert(
        "checks".into(),
        Value::Array(
            verify_check_rows(report)
                .iter()
                .filter(|r| !matches!(&r[0].1, Field::Str(s) if s == "total"))
                .map(json_object)
                .collect(),
        ),
    );
    map.insert(
        "failures".into(),
        Value::Array(failure_rows(report).iter().map(json_object).collect()),
    );
    Value::Object(map)
}

fn verify_text(config: &SweepConfig, p_grid: &str, report: &SweepReport) -> String {
    let mut out = text_record(&verify_summary(config, p_grid, report));
    out.push('\n');
    out.push_str(&text_table(&verify_check_rows(report)));
    if !report.failures.is_empty() {
        out.push('\n');
        out.push_str(&text_table(&failure_rows(report)));
    }
    out
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Bounds {
            n,
            p,
            k,
            log,
            refine,
            format,
        } => cmd_bounds(n, &p, k, log, refine, format),
        Command::Quantile { n, p, q, format } => cmd_quantile(n, &p, &q, format),
        Command::Table {
            n,
            p,
            k_range,
            log,
            format,
        } => cmd_table(n, &p, k_range.as_deref(), log, format),
        Command::Verify {
            n_min,
            n_max,
            p_grid,
            seed,
            quantile_cases,
            refine,
            format,
            inject_fault,
        } => cmd_verify(
            n_min,
            n_max,
            &p_grid,
            seed,
            quantile_cases,
            refine,
            format,
            inject_fault,
        ),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on malformed arguments.
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, passed)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("binom-bounds: verification failed");
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("binom-bounds: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("binom-bounds: {msg}");
            ExitCode::from(1)
        }
    }
}
