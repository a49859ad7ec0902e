//! Deterministic JSON reports and Markdown views derived from them.

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty JSON with a trailing newline; field order follows struct order.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.replace('|', "\\|"),
        Value::Null => String::new(),
        other => other.to_string().replace('|', "\\|"),
    }
}

/// Markdown table from an array of objects, selecting the given keys.
pub fn markdown_table(rows: &Value, keys: &[&str]) -> String {
    let mut out = format!("| {} |\n|{}\n", keys.join(" | "), "---|".repeat(keys.len()));
    for row in rows.as_array().into_iter().flatten() {
        let cells: Vec<String> = keys
            .iter()
            .map(|k| cell(row.get(*k).unwrap_or(&Value::Null)))
            .collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out
}

/// Markdown view of a JSON report: scalar fields as a list, the named array
/// as a table.
pub fn markdown_report(title: &str, json: &str, array_key: &str, keys: &[&str]) -> String {
    let v: Value = serde_json::from_str(json).expect("report JSON parses");
    let mut out = format!("# {title}\n\n");
    if let Value::Object(map) = &v {
        for (k, val) in map {
            if !val.is_array() && !val.is_object() {
                out.push_str(&format!("- **{k}**: {}\n", cell(val)));
            }
        }
    }
    out.push('\n');
    out.push_str(&markdown_table(
        v.get(array_key).unwrap_or(&Value::Null),
        keys,
    ));
    out
}
