//! Plain-text rendering of report documents: one `key: value` line per
//! scalar, nested objects indented, long numeric series abbreviated.

use std::fmt::Write;

use serde_json::Value;

/// Series longer than this are shown as head, count and tail.
const MAX_INLINE: usize = 8;

pub fn text(report: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, 0, None, report);
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn inline_array(items: &[Value]) -> Option<String> {
    let parts: Vec<String> = items
        .iter()
        .map(|v| match v {
            Value::Array(inner) => inline_array(inner).map(|s| format!("[{s}]")),
            other => scalar(other),
        })
        .collect::<Option<_>>()?;
    if parts.len() <= MAX_INLINE {
        Some(parts.join(", "))
    } else {
        let n = parts.len();
        Some(format!(
            "{}, ... ({n} entries) ..., {}",
            parts[..3].join(", "),
            parts[n - 2..].join(", ")
        ))
    }
}

fn write_value(out: &mut String, depth: usize, key: Option<&str>, v: &Value) {
    let pad = "  ".repeat(depth);
    let label = key.map(|k| format!("{pad}{k}:")).unwrap_or_default();
    match v {
        Value::Object(map) => {
            let child = if key.is_some() {
                let _ = writeln!(out, "{label}");
                depth + 1
            } else {
                depth
            };
            for (k, item) in map {
                write_value(out, child, Some(k), item);
            }
        }
        Value::Array(items) if items.iter().any(Value::is_object) => {
            let _ = writeln!(out, "{label}");
            for (i, item) in items.iter().enumerate() {
                write_value(out, depth + 1, Some(&format!("[{}]", i + 1)), item);
            }
        }
        Value::Array(items) => {
            let body = inline_array(items).unwrap_or_default();
            let _ = writeln!(out, "{label} [{body}]");
        }
        other => {
            let _ = writeln!(out, "{label} {}", scalar(other).unwrap_or_default());
        }
    }
}
