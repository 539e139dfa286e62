//! JSON and CSV emission. Infinite reals are written as the strings "inf" and
//! "-inf" in JSON and as empty CSV cells.

use std::io::Write;
use std::path::Path;

use gld_core::measures::JointDistribution;
use serde_json::{json, Value};

use crate::CliError;

pub fn real(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else if x.is_nan() {
        Value::from("nan")
    } else {
        json!(x)
    }
}

pub fn opt_real(x: Option<f64>) -> Value {
    x.map_or(Value::Null, real)
}

pub fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| real(x)).collect())
}

pub fn matrix(j: &Option<JointDistribution>) -> Value {
    match j {
        Some(j) => Value::Array((0..j.rows()).map(|r| reals(j.row(r))).collect()),
        None => Value::Null,
    }
}

/// Fixed 12-significant-digit cell; empty for non-finite values.
pub fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.11e}"),
        _ => String::new(),
    }
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Input(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values are always serializable");
    s.push('\n');
    s
}
