//! Reading return panels, estimate documents and market specifications.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use nalgebra::DMatrix;
use serde::Deserialize;
use volscale::{MarketSpec64, PanelReturns64};

use crate::error::{CliError, CliResult};
use crate::format::SampleInfo;

/// Return panel with the optional date column kept aside.
#[derive(Debug)]
pub struct PanelData {
    pub panel: PanelReturns64,
    pub dates: Option<Vec<String>>,
}

impl PanelData {
    pub fn sample(&self) -> SampleInfo {
        SampleInfo {
            observations: Some(self.panel.len()),
            first_date: self.dates.as_ref().and_then(|d| d.first().cloned()),
            last_date: self.dates.as_ref().and_then(|d| d.last().cloned()),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct SampleDoc {
    observations: Option<usize>,
    first_date: Option<String>,
    last_date: Option<String>,
}

/// JSON document holding estimates and/or fitted parameters.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawDocument {
    labels: Option<Vec<String>>,
    sample: Option<SampleDoc>,
    returns: Option<Vec<Vec<f64>>>,
    gammas: Option<Vec<Vec<Vec<f64>>>>,
    gamma0: Option<Vec<Vec<f64>>>,
    phi1: Option<Vec<Vec<f64>>>,
    theta1: Option<Vec<Vec<f64>>>,
    sigma: Option<Vec<Vec<f64>>>,
    phi: Option<f64>,
    theta: Option<f64>,
}

/// Moments and parameters read from a JSON document.
#[derive(Debug, Default)]
pub struct Document {
    pub labels: Option<Vec<String>>,
    pub sample: SampleInfo,
    pub gammas: Option<Vec<DMatrix<f64>>>,
    pub gamma0: Option<DMatrix<f64>>,
    pub phi1: Option<DMatrix<f64>>,
    pub theta1: Option<DMatrix<f64>>,
    pub sigma: Option<DMatrix<f64>>,
    pub phi: Option<f64>,
    pub theta: Option<f64>,
}

pub enum Source {
    Panel(PanelData),
    Document(Document),
}

pub fn read_text(path: Option<&Path>) -> CliResult<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::validation(format!("{}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn looks_like_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

/// Read a CSV panel or a JSON document.
pub fn read_source(path: Option<&Path>) -> CliResult<Source> {
    let text = read_text(path)?;
    if looks_like_json(&text) {
        let raw: RawDocument = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("line {}: {e}", e.line())))?;
        if let Some(returns) = raw.returns {
            let n = returns.first().map_or(0, Vec::len);
            let labels = raw.labels.unwrap_or_else(|| default_labels(n));
            return Ok(Source::Panel(PanelData { panel: build_panel(returns, labels)?, dates: None }));
        }
        Ok(Source::Document(document(raw)?))
    } else {
        Ok(Source::Panel(parse_panel_csv(&text)?))
    }
}

pub fn read_panel(path: Option<&Path>) -> CliResult<PanelData> {
    match read_source(path)? {
        Source::Panel(p) => Ok(p),
        Source::Document(_) => Err(CliError::validation("expected a return panel")),
    }
}

pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("asset{i}")).collect()
}

fn matrix(name: &str, rows: Vec<Vec<f64>>) -> CliResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(CliError::validation(format!("`{name}` is empty")));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::validation(format!("`{name}` has rows of unequal length")));
    }
    Ok(DMatrix::from_row_iterator(nrows, ncols, rows.into_iter().flatten()))
}

fn document(raw: RawDocument) -> CliResult<Document> {
    let opt = |name: &str, m: Option<Vec<Vec<f64>>>| m.map(|m| matrix(name, m)).transpose();
    let gammas = raw
        .gammas
        .map(|g| g.into_iter().enumerate().map(|(k, m)| matrix(&format!("gammas[{k}]"), m)).collect::<CliResult<Vec<_>>>())
        .transpose()?;
    let sample = raw
        .sample
        .map(|s| SampleInfo { observations: s.observations, first_date: s.first_date, last_date: s.last_date })
        .unwrap_or_default();
    Ok(Document {
        labels: raw.labels,
        sample,
        gammas,
        gamma0: opt("gamma0", raw.gamma0)?,
        phi1: opt("phi1", raw.phi1)?,
        theta1: opt("theta1", raw.theta1)?,
        sigma: opt("sigma", raw.sigma)?,
        phi: raw.phi,
        theta: raw.theta,
    })
}

fn build_panel(rows: Vec<Vec<f64>>, labels: Vec<String>) -> CliResult<PanelReturns64> {
    let ncols = labels.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::validation(format!("row {} has {} values, expected {ncols}", bad + 1, rows[bad].len())));
    }
    let nrows = rows.len();
    Ok(PanelReturns64::new(DMatrix::from_row_iterator(nrows, ncols, rows.into_iter().flatten()), labels)?)
}

fn parse_date(s: &str) -> bool {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
        || NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").is_ok()
        || NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").is_ok()
        || DateTime::parse_from_rfc3339(s).is_ok()
}

fn is_date_header(h: &str) -> bool {
    matches!(h.to_ascii_lowercase().as_str(), "date" | "time" | "timestamp" | "datetime")
}

/// Parse a CSV panel: header of labels, one row per period, optional leading date column.
pub fn parse_panel_csv(text: &str) -> CliResult<PanelData> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::validation(format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::validation("line 1: missing header row"));
    }
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            match e.kind() {
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    CliError::validation(format!("line {line}: expected {expected_len} fields, found {len}"))
                }
                _ => CliError::validation(format!("line {line}: {e}")),
            }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    let has_dates =
        is_date_header(&header[0]) || records.first().is_some_and(|(_, r)| r.get(0).is_some_and(parse_date));
    let skip = usize::from(has_dates);
    let labels: Vec<String> = header[skip..].to_vec();
    if labels.is_empty() {
        return Err(CliError::validation("line 1: no asset columns"));
    }
    let mut dates = Vec::new();
    let mut values = Vec::with_capacity(records.len() * labels.len());
    for (line, rec) in &records {
        if has_dates {
            let d = rec.get(0).unwrap_or_default();
            if !parse_date(d) {
                return Err(CliError::validation(format!("line {line}: `{d}` is not an ISO-8601 date")));
            }
            dates.push(d.to_string());
        }
        for (j, field) in rec.iter().skip(skip).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::validation(format!("line {line}: cannot parse `{field}` in column `{}` as a number", labels[j]))
            })?;
            if !v.is_finite() {
                return Err(CliError::validation(format!("line {line}: non-finite value in column `{}`", labels[j])));
            }
            values.push(v);
        }
    }
    let panel = PanelReturns64::new(DMatrix::from_row_slice(records.len(), labels.len(), &values), labels)?;
    Ok(PanelData { panel, dates: has_dates.then_some(dates) })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    labels: Option<Vec<String>>,
    sigma: Vec<Vec<f64>>,
    closing_fractions: Vec<f64>,
}

/// Read a market specification `{labels, sigma, closing_fractions}`.
pub fn read_spec(path: Option<&Path>) -> CliResult<MarketSpec64> {
    let text = read_text(path)?;
    let doc: SpecDoc =
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("line {}: {e}", e.line())))?;
    let sigma = matrix("sigma", doc.sigma)?;
    let labels = doc.labels.unwrap_or_else(|| default_labels(sigma.nrows()));
    Ok(MarketSpec64::with_labels(sigma, doc.closing_fractions, labels)?)
}
