//! Indented JSON in which arrays of scalars stay on one line, so matrices
//! read row by row.

use std::fmt::Write as _;

use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FloatStyle {
    /// Shortest text that parses back to the same `f64`.
    Shortest,
    /// Scientific notation with 17 significant digits.
    SignificantDigits17,
}

pub fn pretty(value: &Value, style: FloatStyle) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0, style);
    out
}

fn pad(out: &mut String, depth: usize) {
    out.extend(std::iter::repeat_n("  ", depth));
}

fn is_scalar(v: &Value) -> bool {
    !v.is_array() && !v.is_object()
}

fn write_value(out: &mut String, value: &Value, depth: usize, style: FloatStyle) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let _ = match style {
                FloatStyle::Shortest => write!(out, "{n}"),
                FloatStyle::SignificantDigits17 => write!(out, "{x:.16e}"),
            };
        }
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, depth, style);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1, style);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1, style);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn matrices_print_row_per_line() {
        let text = pretty(&json!({"m": [[1.0, 0.5], [2, 3]], "e": []}), FloatStyle::Shortest);
        assert_eq!(text, "{\n  \"m\": [\n    [1.0, 0.5],\n    [2, 3]\n  ],\n  \"e\": []\n}");
    }

    #[test]
    fn both_styles_round_trip() {
        let v = json!([0.1, 2.0 / 3.0, -1e-300, 12345.678]);
        for style in [FloatStyle::Shortest, FloatStyle::SignificantDigits17] {
            let back: Value = serde_json::from_str(&pretty(&v, style)).unwrap();
            assert_eq!(back, v);
        }
    }
}
