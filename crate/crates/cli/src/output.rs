//! Result emission: JSON records and CSV tables with numbers rounded to 12
//! significant digits.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Number, Value};

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every float inside a JSON value in place.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(record: &T) -> anyhow::Result<String> {
    let mut v = serde_json::to_value(record)?;
    round_floats(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Formats a float for CSV with 12 significant digits.
pub fn csv_number(x: f64) -> String {
    round_sig(x).to_string()
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes `text` to `path`, or to stdout without one.
pub fn emit(text: &str, path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(round_sig(0.123_456_789_012_345), 0.123_456_789_012);
        assert_eq!(round_sig(1234.567_890_123_45), 1234.567_890_12);
        assert_eq!(round_sig(0.0), 0.0);
        let mut v = serde_json::json!({"a": [1.000_000_000_000_4, 2], "b": {"c": 1.0 / 3.0}});
        round_floats(&mut v);
        assert_eq!(v["a"][0], 1.0);
        assert_eq!(v["a"][1], 2);
        assert_eq!(v["b"]["c"], 0.333_333_333_333);
    }
}
