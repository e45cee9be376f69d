//! Textual input formats shared by the command line and the fuzz targets.
//!
//! * probability: a decimal (`0.3`, `.25`, `1e-3`, `3.5E-2`) or a fraction
//!   `a/b` of non-negative integers. The exact rational value is kept
//!   alongside the nearest `f64`.
//! * grid: `start:stop:step`, inclusive of `stop` within half a step.
//! * k range: `a` or `a:b` (inclusive).

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::oracle::ExactProb;

/// Largest decimal exponent magnitude accepted; keeps exact values small.
const MAX_EXPONENT: i64 = 400;
/// Longest accepted input, in bytes.
const MAX_LEN: usize = 512;
/// Most points a grid may expand to.
pub const MAX_GRID_POINTS: usize = 1_000_000;

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}

/// A probability as typed: its exact value and nearest double.
#[derive(Debug, Clone, PartialEq)]
pub struct Probability {
    pub value: f64,
    pub exact: ExactProb,
}

impl Probability {
    /// `true` if strictly between 0 and 1.
    pub fn is_open_unit(&self) -> bool {
        !self.exact.is_zero() && self.exact.numerator() != self.exact.denominator()
    }
}

/// Non-negative decimal as an exact fraction.
fn parse_decimal(s: &str) -> Result<(BigUint, BigUint)> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let exponent: i64 = match exponent {
        None => 0,
        Some(e) => {
            let digits = e.strip_prefix(['+', '-']).unwrap_or(e);
            if digits.is_empty() || digits.len() > 6 || !digits.bytes().all(|b| b.is_ascii_digit())
            {
                return parse_err(format!("bad exponent in {s:?}"));
            }
            e.parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?
        }
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return parse_err(format!("no digits in {s:?}"));
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return parse_err(format!("not a decimal number: {s:?}"));
    }
    let digits = format!("{int_part}{frac_part}");
    let scale = exponent - frac_part.len() as i64;
    if scale.abs() > MAX_EXPONENT + MAX_LEN as i64 {
        return parse_err(format!("exponent out of range in {s:?}"));
    }
    let mut num = BigUint::parse_bytes(digits.as_bytes(), 10).unwrap_or_default();
    let mut den = BigUint::one();
    let ten = BigUint::from(10u32);
    if scale >= 0 {
        if !num.is_zero() && num.bits() as i64 + 4 * scale > 4 * MAX_EXPONENT {
            return parse_err(format!("value too large: {s:?}"));
        }
        num *= num_traits::pow(ten, scale as usize);
    } else {
        den = num_traits::pow(ten, (-scale) as usize);
    }
    Ok((num, den))
}

/// Parses a probability in `[0, 1]`.
pub fn parse_probability(s: &str) -> Result<Probability> {
    let s = s.trim();
    if s.len() > MAX_LEN {
        return parse_err("input too long");
    }
    let (num, den) = if let Some((a, b)) = s.split_once('/') {
        let int = |t: &str| -> Result<BigUint> {
            let t = t.trim();
            if t.is_empty() || t.len() > 200 || !t.bytes().all(|c| c.is_ascii_digit()) {
                return parse_err(format!(
                    "fraction parts must be non-negative integers: {s:?}"
                ));
            }
            Ok(BigUint::parse_bytes(t.as_bytes(), 10).unwrap_or_default())
        };
        let (a, b) = (int(a)?, int(b)?);
        if b.is_zero() {
            return parse_err(format!("zero denominator in {s:?}"));
        }
        (a, b)
    } else {
        parse_decimal(s)?
    };
    if num > den {
        return parse_err(format!("probability must lie in [0, 1], got {s:?}"));
    }
    let exact = ExactProb::new(num, den)?;
    Ok(Probability {
        value: exact.to_f64(),
        exact,
    })
}

/// Expands `start:stop:step` into probabilities.
///
/// Points are `start + i·step` computed exactly, then rounded once; `stop`
/// is included when it lies within half a step of a grid point.
pub fn parse_grid(s: &str) -> Result<Vec<Probability>> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return parse_err(format!("grid must be start:stop:step, got {s:?}"));
    };
    let start = parse_probability(start)?.exact;
    let stop = parse_probability(stop)?.exact;
    let step = parse_probability(step)?.exact;
    if step.is_zero() {
        return parse_err("grid step must be positive");
    }
    if start > stop {
        return parse_err("grid start exceeds stop");
    }
    // Over the common denominator D: start = s0/D, stop = s1/D, step = h/D.
    let den = start.denominator() * stop.denominator() * step.denominator();
    let s0 = start.numerator() * stop.denominator() * step.denominator();
    let s1 = stop.numerator() * start.denominator() * step.denominator();
    let h = step.numerator() * start.denominator() * stop.denominator();
    // Largest i with s0 + i h <= s1 + h/2, i.e. 2 i h <= 2 (s1 - s0) + h.
    let count = (BigUint::from(2u32) * (&s1 - &s0) + &h) / (BigUint::from(2u32) * &h);
    let count: usize = match u64::try_from(&count) {
        Ok(c) if (c as usize) < MAX_GRID_POINTS => c as usize,
        _ => return parse_err(format!("grid {s:?} has more than {MAX_GRID_POINTS} points")),
    };
    let mut out = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let num = &s0 + &h * i;
        if num > den {
            // Only reachable through the half-step allowance past 1.
            break;
        }
        let exact = ExactProb::new(num, den.clone())?.reduced();
        out.push(Probability {
            value: exact.to_f64(),
            exact,
        });
    }
    Ok(out)
}

/// Parses `a` or `a:b` into an inclusive range of counts.
pub fn parse_k_range(s: &str) -> Result<(u64, u64)> {
    let num = |t: &str| -> Result<u64> {
        let t = t.trim();
        if t.is_empty() || !t.bytes().all(|c| c.is_ascii_digit()) {
            return parse_err(format!("expected a non-negative integer, got {t:?}"));
        }
        t.parse()
            .map_err(|_| Error::Parse(format!("integer out of range: {t:?}")))
    };
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let k = num(s)?;
            (k, k)
        }
    };
    if lo > hi {
        return parse_err(format!("empty range {s:?}"));
    }
    Ok((lo, hi))
}
