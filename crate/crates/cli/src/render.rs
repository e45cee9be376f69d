//! Output formats. Every real number leaves through [`fmt17`], so json and
//! csv carry 17 significant digits and re-parse to the identical `f64`.

use std::str::FromStr;

use clap::ValueEnum;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// One cell of output.
#[derive(Debug, Clone)]
pub enum Field {
    Int(u64),
    Num(f64),
    Str(String),
    Bool(bool),
    /// Not applicable for this row.
    Missing,
}

impl Field {
    pub fn to_json(&self) -> Value {
        match self {
            Field::Int(i) => Value::from(*i),
            Field::Num(x) if x.is_finite() => {
                Value::Number(Number::from_str(&fmt17(*x)).expect("fmt17 emits json numbers"))
            }
            // JSON has no infinities; consumers read null as "not representable".
            Field::Num(_) | Field::Missing => Value::Null,
            Field::Str(s) => Value::String(s.clone()),
            Field::Bool(b) => Value::Bool(*b),
        }
    }

    fn to_cell(&self) -> String {
        match self {
            Field::Int(i) => i.to_string(),
            Field::Num(x) => fmt17(*x),
            Field::Str(s) => s.clone(),
            Field::Bool(b) => b.to_string(),
            Field::Missing => String::new(),
        }
    }
}

/// Named fields, in output order.
pub type Record = Vec<(&'static str, Field)>;

/// Shortest positional or scientific rendering of `x` rounded to 17
/// significant digits. Trailing zeros of the significand are dropped, which
/// does not change the value.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let mut digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    while digits.len() > 1 && digits.ends_with('0') {
        digits.pop();
    }
    let sign = if negative { "-" } else { "" };
    if (-5..17).contains(&exponent) {
        if exponent >= 0 {
            let int_len = exponent as usize + 1;
            if digits.len() <= int_len {
                format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
            } else {
                format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
            }
        } else {
            format!("{sign}0.{}{digits}", "0".repeat((-exponent - 1) as usize))
        }
    } else if digits.len() == 1 {
        format!("{sign}{digits}e{exponent}")
    } else {
        format!("{sign}{}.{}e{exponent}", &digits[..1], &digits[1..])
    }
}

pub fn json_object(record: &Record) -> Value {
    let mut map = Map::new();
    for (key, field) in record {
        map.insert((*key).to_string(), field.to_json());
    }
    Value::Object(map)
}

pub fn json_string(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

/// Header plus one line per record; all records share the first one's keys.
pub fn csv_table(records: &[Record]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    if let Some(first) = records.first() {
        w.write_record(first.iter().map(|(k, _)| *k))
            .expect("in-memory write");
    }
    for r in records {
        w.write_record(r.iter().map(|(_, f)| f.to_cell()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// `key  value` lines with keys padded to a common width.
pub fn text_record(record: &Record) -> String {
    let width = record.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (key, field) in record {
        let cell = match field {
            Field::Missing => "-".to_string(),
            f => f.to_cell(),
        };
        out.push_str(&format!("{key:<width$}  {cell}\n"));
    }
    out
}

/// Right-aligned columns with a header line.
pub fn text_table(records: &[Record]) -> String {
    let Some(first) = records.first() else {
        return String::new();
    };
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            r.iter()
                .map(|(_, f)| match f {
                    Field::Missing => "-".to_string(),
                    f => f.to_cell(),
                })
                .collect()
        })
        .collect();
    let widths: Vec<usize> = first
        .iter()
        .enumerate()
        .map(|(i, (k, _))| {
            rows.iter()
                .map(|r| r[i].len())
                .max()
                .unwrap_or(0)
                .max(k.len())
        })
        .collect();
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        padded.join("  ") + "\n"
    };
    let mut out = line(first.iter().map(|(k, _)| *k).collect());
    for r in &rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [
            0.1,
            0.3,
            0.5,
            1.0,
            2.0,
            1e16,
            1.5e17,
            123456.789,
            -0.26283,
            1e-5,
            9.99e-6,
            5e-324,
            f64::MAX,
            f64::MIN_POSITIVE,
            -20141.7342078317,
            1.0 / 3.0,
        ] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits = s
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(char::is_ascii_digit);
            assert!(digits.count() <= 17 + 5, "{s}");
        }
    }

    #[test]
    fn rendering_shapes() {
        assert_eq!(fmt17(0.5), "0.5");
        assert_eq!(fmt17(0.1), "0.10000000000000001");
        assert_eq!(fmt17(2.0), "2");
        assert_eq!(fmt17(1e-5), "0.000010000000000000001");
        assert_eq!(fmt17(1e-6), "9.9999999999999995e-7");
        assert_eq!(fmt17(-1e300), "-1.0000000000000001e300");
        assert_eq!(fmt17(1e17), "1e17");
        assert_eq!(fmt17(0.0), "0");
        assert_eq!(fmt17(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_uses_newlines() {
        let r: Record = vec![
            ("a", Field::Int(1)),
            ("b", Field::Num(0.25)),
            ("c", Field::Missing),
        ];
        assert_eq!(csv_table(&[r.clone(), r]), "a,b,c\n1,0.25,\n1,0.25,\n");
    }

    #[test]
    fn json_null_for_non_finite() {
        let r: Record = vec![
            ("x", Field::Num(f64::NEG_INFINITY)),
            ("y", Field::Num(0.25)),
        ];
        assert_eq!(
            serde_json::to_string(&json_object(&r)).unwrap(),
            r#"{"x":null,"y":0.25}"#
        );
    }
}
