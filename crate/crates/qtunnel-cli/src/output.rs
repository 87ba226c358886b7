//! Deterministic CSV and metadata emission.
//!
//! CSV dialect: comma separators, '.' decimal point, scientific notation
//! with 17 significant digits, LF line endings, UTF-8, no quoting.  The
//! sidecar shares the CSV basename with a `.meta` suffix and holds one
//! `key = value` line per entry in insertion order.

use std::fs;
use std::io::{BufWriter, Write};

/// 17 significant digits: lossless round-trip for doubles.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Dataset {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    meta: Vec<(String, String)>,
}

impl Dataset {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta_f64(&mut self, key: &str, value: f64) {
        self.meta.push((key.to_string(), fmt(value)));
    }

    /// Records resolved parameters, flagging defaulted ones.
    pub fn meta_resolved(&mut self, log: &[(String, String, bool)]) {
        for (key, value, defaulted) in log {
            if *defaulted {
                self.meta
                    .push((format!("default.{key}"), value.to_string()));
            }
        }
    }

    pub fn write(&self, csv_path: &str) -> Result<(), String> {
        let file = fs::File::create(csv_path)
            .map_err(|e| format!("cannot create {csv_path}: {e}"))?;
        let mut w = BufWriter::new(file);
        let io_err = |e: std::io::Error| format!("cannot write {csv_path}: {e}");
        writeln!(w, "{}", self.columns.join(",")).map_err(io_err)?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|x| fmt(*x)).collect();
            writeln!(w, "{}", line.join(",")).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;

        let meta_path = format!("{csv_path}.meta");
        let file = fs::File::create(&meta_path)
            .map_err(|e| format!("cannot create {meta_path}: {e}"))?;
        let mut w = BufWriter::new(file);
        let io_err = |e: std::io::Error| format!("cannot write {meta_path}: {e}");
        for (key, value) in &self.meta {
            writeln!(w, "{key} = {value}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_lossless() {
        for &x in &[
            1.0,
            -0.3333333333333333,
            1.2345678901234567e-300,
            6.02214076e23,
        ] {
            let s = fmt(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }
}
