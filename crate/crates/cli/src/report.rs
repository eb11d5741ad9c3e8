//! Reports rendered as text tables, long-format CSV or versioned JSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Table {
    /// Short identifier used in CSV output.
    pub name: String,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, title: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            title: title.to_owned(),
            header: header.iter().map(|h| (*h).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub data: Map<String, Value>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    /// Extra files written next to the report.
    pub files: Vec<PathBuf>,
    /// Set when a verification step failed; the report is still written.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            data: Map::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
            failure: None,
        }
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.data
            .insert(key.to_owned(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("schema_version".into(), SCHEMA_VERSION.into());
        root.insert("command".into(), self.command.into());
        root.extend(self.data.clone());
        if !self.notes.is_empty() {
            root.insert("notes".into(), self.notes.clone().into());
        }
        if !self.files.is_empty() {
            let files: Vec<String> = self.files.iter().map(|p| p.display().to_string()).collect();
            root.insert("files".into(), files.into());
        }
        Value::Object(root)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tables {
            out.push_str(&render_table(t));
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        for f in &self.files {
            out.push_str(&format!("wrote {}\n", f.display()));
        }
        out
    }

    /// Long format: one line per table cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,row,column,value\n");
        for t in &self.tables {
            for row in &t.rows {
                let key = row.first().cloned().unwrap_or_default();
                for (h, v) in t.header.iter().zip(row).skip(1) {
                    let fields = [t.name.as_str(), key.as_str(), h.as_str(), v.as_str()];
                    let line: Vec<String> = fields.iter().map(|f| csv_field(f)).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Text => self.to_text(),
            Format::Json => serde_json::to_string_pretty(&self.to_json())? + "\n",
            Format::Csv => self.to_csv(),
        })
    }

    /// Writes to `<out>/<command>.<ext>` or stdout.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let body = self.render(format)?;
        match out {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join(format!("{}.{}", self.command, format.extension()));
                fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
            None => std::io::stdout().lock().write_all(body.as_bytes())?,
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn render_table(t: &Table) -> String {
    let width = |s: &str| s.chars().count();
    let mut widths: Vec<usize> = t.header.iter().map(|h| width(h)).collect();
    for row in &t.rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(width(cell));
            }
        }
    }
    // Right-align columns holding only numbers.
    let numeric: Vec<bool> = (0..widths.len())
        .map(|i| {
            i > 0
                && t.rows.iter().all(|r| {
                    r.get(i).is_none_or(|c| {
                        c == "n/a" || c.parse::<f64>().is_ok() || c.starts_with('[')
                    })
                })
        })
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                let pad = " ".repeat(w - width(c));
                if numeric[i] {
                    format!("{pad}{c}")
                } else {
                    format!("{c}{pad}")
                }
            })
            .collect();
        padded.join("  ").trim_end().to_owned() + "\n"
    };
    let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)) + "\n";
    let mut out = format!("{}\n{rule}", t.title);
    out.push_str(&line(&t.header));
    out.push_str(&rule);
    for row in &t.rows {
        out.push_str(&line(row));
    }
    out.push_str(&rule);
    out
}

/// Fixed-point number, or `n/a`.
pub fn num(x: Option<f64>, digits: usize) -> String {
    match x {
        Some(v) if v.is_finite() => {
            let s = format!("{v:.digits$}");
            // Avoid printing "-0.00".
            if s.trim_start_matches('-')
                .chars()
                .all(|c| c == '0' || c == '.')
            {
                s.trim_start_matches('-').to_owned()
            } else {
                s
            }
        }
        _ => "n/a".to_owned(),
    }
}

pub fn fixed(x: f64, digits: usize) -> String {
    num(Some(x), digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_is_printed_without_sign() {
        assert_eq!(fixed(-0.001, 2), "0.00");
        assert_eq!(fixed(-0.01, 2), "-0.01");
        assert_eq!(num(None, 2), "n/a");
    }

    #[test]
    fn csv_quotes_commas() {
        let mut r = Report::new("t");
        let mut t = Table::new("shares", "Shares", &["quantity", "estimate"]);
        t.row(vec!["P(c,c)".into(), "0.49".into()]);
        r.tables.push(t);
        assert_eq!(
            r.to_csv(),
            "table,row,column,value\nshares,\"P(c,c)\",estimate,0.49\n"
        );
    }

    #[test]
    fn json_carries_the_schema_version() {
        let r = Report::new("analyze");
        assert_eq!(r.to_json()["schema_version"], 1);
        assert_eq!(r.to_json()["command"], "analyze");
    }
}
