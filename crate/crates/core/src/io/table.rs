use std::fs;
use std::path::Path;

use super::{format_error, io_error};
use crate::error::Result;

/// Formats a float so that it parses back to the same value. Magnitudes
/// outside `[1e-3, 1e6)` use exponent notation.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-3..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Numeric CSV table with `# key: value` header lines and free-form
/// trailing comment lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    meta: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub trailer: Vec<String>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push_meta(&mut self, key: &str, value: impl Into<String>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn push_trailer(&mut self, line: String) {
        self.trailer.push(line);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_number(x))).expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory write");
        out.push_str(std::str::from_utf8(&body).expect("csv output is UTF-8"));
        for line in &self.trailer {
            out.push_str(&format!("# {line}\n"));
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut t = Table::default();
        let mut seen_body = false;
        for line in text.lines() {
            if let Some(c) = line.strip_prefix('#') {
                let c = c.trim();
                if seen_body {
                    t.trailer.push(c.to_string());
                } else if let Some((k, v)) = c.split_once(':') {
                    t.meta.push((k.trim().to_string(), v.trim().to_string()));
                }
            } else if !line.trim().is_empty() {
                seen_body = true;
            }
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        t.headers = r
            .headers()
            .map_err(|e| format_error(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| format_error(path, e.to_string()))?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    s.parse::<f64>()
                        .map_err(|_| format_error(path, format!("row {}, column {}: `{s}` is not a number", i + 1, j + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            t.rows.push(row);
        }
        Ok(t)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::parse(&text, path)
    }

    pub fn column(&self, path: &Path, name: &str) -> Result<Vec<f64>> {
        let j = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format_error(path, format!("missing column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }
}
