//! Number formatting and report rendering.

use std::io::Write;

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use crate::error::CliResult;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Round to twelve significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest text that reads back as the twelve-digit rounding of `x`.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    if !r.is_finite() {
        return r.to_string();
    }
    let a = r.abs();
    if (1e-5..1e15).contains(&a) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

pub fn num(x: f64) -> Value {
    match serde_json::Number::from_f64(round_sig(x)) {
        Some(n) => Value::Number(n),
        None => Value::Null,
    }
}

pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect())).collect())
}

/// Observation count and date span of the input sample.
#[derive(Debug, Clone, Default)]
pub struct SampleInfo {
    pub observations: Option<usize>,
    pub first_date: Option<String>,
    pub last_date: Option<String>,
}

impl SampleInfo {
    fn json(&self) -> Value {
        let mut m = Map::new();
        if let Some(n) = self.observations {
            m.insert("observations".into(), json!(n));
        }
        if let Some(d) = &self.first_date {
            m.insert("first_date".into(), json!(d));
        }
        if let Some(d) = &self.last_date {
            m.insert("last_date".into(), json!(d));
        }
        Value::Object(m)
    }

    fn comment_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(n) = self.observations {
            out.push(format!("# observations: {n}"));
        }
        if let (Some(a), Some(b)) = (&self.first_date, &self.last_date) {
            out.push(format!("# period: {a} to {b}"));
        }
        out
    }
}

/// A report held in both renderings.
pub struct Report {
    pub sample: SampleInfo,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub json: Map<String, Value>,
}

impl Report {
    pub fn new(sample: SampleInfo, header: &[&str]) -> Self {
        Report { sample, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), json: Map::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> CliResult<()> {
        for line in self.sample.comment_lines() {
            writeln!(out, "{line}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, out: &mut dyn Write) -> CliResult<()> {
        let mut doc = Map::new();
        let sample = self.sample.json();
        if sample.as_object().is_some_and(|m| !m.is_empty()) {
            doc.insert("sample".into(), sample);
        }
        doc.extend(self.json.clone());
        serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))
            .map_err(|e| crate::error::CliError::validation(e.to_string()))?;
        writeln!(out)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::error::CliError {
    crate::error::CliError::validation(e.to_string())
}
