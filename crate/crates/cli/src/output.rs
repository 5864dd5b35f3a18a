use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use treeoda::AttributedTree;

use crate::{Format, OutputArgs};

pub fn tree_json(t: &AttributedTree) -> Value {
    let nodes: Vec<Value> = t.nodes().map(|(k, a)| json!({"k": k, "a": a})).collect();
    Value::Array(nodes)
}

/// Writes `doc` as pretty JSON or as long-format CSV rows
/// `section,key,field,value`.
pub fn emit(doc: &Value, io: &OutputArgs) -> Result<()> {
    let text = match io.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc)?;
            s.push('\n');
            s
        }
        Format::Csv => to_csv(doc)?,
    };
    write_text(&text, io.out.as_deref())
}

pub fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_csv(doc: &Value) -> Result<String> {
    let mut rows = Vec::new();
    flatten(doc, &mut Vec::new(), &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["section", "key", "field", "value"])?;
    for (path, value) in rows {
        let section = path.first().cloned().unwrap_or_default();
        let key = path.get(1).cloned().unwrap_or_default();
        let field = path.get(2..).map(|p| p.join(".")).unwrap_or_default();
        w.write_record([section, key, field, value])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn flatten(v: &Value, path: &mut Vec<String>, rows: &mut Vec<(Vec<String>, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                path.push(k.clone());
                flatten(child, path, rows);
                path.pop();
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                path.push(i.to_string());
                flatten(child, path, rows);
                path.pop();
            }
        }
        Value::Null => rows.push((path.clone(), String::new())),
        Value::String(s) => rows.push((path.clone(), s.clone())),
        Value::Bool(b) => rows.push((path.clone(), b.to_string())),
        Value::Number(n) => rows.push((path.clone(), n.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_keep_full_precision() {
        let doc = json!({"report": {"total": 0.1 + 0.2}, "ids": ["a", "b"], "none": null});
        let text = to_csv(&doc).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "section,key,field,value");
        assert!(lines.contains(&"report,total,,0.30000000000000004"));
        assert!(lines.contains(&"ids,1,,b"));
        assert!(lines.contains(&"none,,,"));
    }
}
