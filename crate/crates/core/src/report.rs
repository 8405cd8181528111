//! Serialization of reports and tables.
//!
//! Floating-point numbers are written with 17 significant digits so that
//! every `f64` round-trips; non-finite values become `null`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::scaling::VerificationReport;

/// `x` with 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_f64(n.as_f64().unwrap()));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.iter().all(|i| !i.is_array() && !i.is_object()) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, item, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty JSON with 17-significant-digit floats and sorted keys.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

fn join_numbers(xs: &[f64]) -> String {
    xs.iter()
        .map(|&x| format_f64(x))
        .collect::<Vec<_>>()
        .join(" ")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

/// One row per point: `T,times,thetas,lhs,rhs,rel_err,label,error`, where
/// multi-time tuples are space-separated inside their cell.
pub fn report_csv(report: &VerificationReport<f64>) -> String {
    let mut out = String::from("T,times,thetas,lhs,rhs,rel_err,label,error\n");
    for p in &report.points {
        let error = p.error.as_deref().unwrap_or("").replace('"', "'");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},\"{}\"",
            format_f64(p.scale),
            join_numbers(&p.times),
            join_numbers(&p.thetas),
            opt(p.lhs),
            opt(p.rhs),
            opt(p.rel_err),
            p.label.as_deref().unwrap_or(""),
            error
        );
    }
    out
}

/// Header row of names followed by one row per record.
pub fn write_matrix_csv<W: Write>(
    mut w: W,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
