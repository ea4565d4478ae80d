//! Report rendering: CSV with `#` metadata lines, or a single JSON document.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Shortest round-trip decimal.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

pub struct Report {
    command: &'static str,
    config: Value,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str, global: Value, params: Value, columns: &[&str]) -> Self {
        Self {
            command,
            config: json!({ "global": global, "params": params }),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.columns.len());
        self.rows.push(fields);
    }

    pub fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = format!("# channel-moments {}\n", channel_moments::VERSION);
                s += &format!("# command: {}\n", self.command);
                s += &format!("# config: {}\n", self.config);
                for n in &self.notes {
                    s += &format!("# {n}\n");
                }
                s += &csv_line(&self.columns);
                for r in &self.rows {
                    s += &csv_line(r);
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let m: Map<String, Value> =
                            self.columns.iter().cloned().zip(r.iter().map(|v| Value::String(v.clone()))).collect();
                        Value::Object(m)
                    })
                    .collect();
                let doc = json!({
                    "tool": "channel-moments",
                    "version": channel_moments::VERSION,
                    "command": self.command,
                    "config": self.config,
                    "notes": self.notes,
                    "columns": self.columns,
                    "rows": rows,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
                s.push('\n');
                s
            }
        }
    }

    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let text = self.render(format);
        match out {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut o = std::io::stdout().lock();
                o.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn csv_line(fields: &[String]) -> String {
    let escaped: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    escaped.join(",") + "\n"
}
