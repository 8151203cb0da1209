//! CSV and JSON artifact writers.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::dynamics::relative_drift;
use crate::linalg::CMat;

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column-major numeric table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    /// Columns holding conserved quantities; their drift goes into the manifest.
    pub monitors: Vec<String>,
}

impl Table {
    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        if let Some(first) = self.columns.first() {
            debug_assert_eq!(first.len(), values.len());
        }
        self.header.push(name.into());
        self.columns.push(values);
    }

    pub fn push_monitor(&mut self, name: &str, values: Vec<f64>) {
        self.monitors.push(name.to_string());
        self.push(name, values);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// (name, max relative drift) for every monitor column.
    pub fn drift(&self) -> Vec<(String, f64)> {
        self.monitors
            .iter()
            .map(|m| (m.clone(), relative_drift(self.column(m).expect("monitor column"))))
            .collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for i in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| fmt_f64(c[i])))?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let bytes = self.to_csv().map_err(std::io::Error::other)?;
        fs::write(path, bytes)
    }
}

/// Reads a numeric CSV with a header row into a [`Table`].
pub fn read_csv(path: &Path) -> Result<Table, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let header: Vec<String> = rdr.headers().map_err(|e| format!("{}: {e}", path.display()))?.iter().map(|h| h.trim().to_string()).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| format!("{}: row {}, column `{}`: not a number: {field:?}", path.display(), line + 2, header[j]))?;
            columns[j].push(v);
        }
    }
    Ok(Table { header, columns, monitors: Vec::new() })
}

pub fn write_json(path: &Path, v: &Value) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(std::io::Error::other)?;
    s.push('\n');
    fs::write(path, s)
}

/// Nested rows of [re, im] pairs.
pub fn matrix_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
            .collect(),
    )
}
