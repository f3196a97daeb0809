//! The six subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};

use nalgebra::DMatrix;
use serde_json::{json, Value};
use volscale::closing_time::{simulate_panel, theoretical_closing_cov};
use volscale::contributions::{contribution_report, portfolio_acov};
use volscale::estimation::{newey_west_lag1, naive_contemporaneous, sample_acov, ContemporaneousEstimate};
use volscale::scaling::{ar1_delta_d, ma1_delta_d, scaling_report};
use volscale::varma::{
    contemporaneous_ratio, fit_ma1_from_rho, fit_phi1_from_moments, fit_vma1_moments, var1_delta_d,
    var1_sequence, var1_stationary_cov, varma_acov, vma1_delta_d,
};
use volscale::{CovSequence64, ScalingReport64, ScalingRow, VarmaModel64, Weights64};

use crate::args::{Format, Model, Settings};
use crate::error::{CliError, CliResult};
use crate::format::{fmt_num, matrix_json, num, Report, SampleInfo};
use crate::input::{default_labels, read_panel, read_source, read_spec, Document, Source};

/// Tolerance of the full-allocation check on serialized contribution rows.
const ALLOCATION_TOL: f64 = 1e-8;

/// Moments and parameters available to a command.
struct Loaded {
    labels: Vec<String>,
    sample: SampleInfo,
    gammas: Option<CovSequence64>,
    doc: Document,
}

impl Loaded {
    fn dim(&self) -> Option<usize> {
        self.gammas
            .as_ref()
            .map(|g| g.dim())
            .or(self.doc.gamma0.as_ref().map(|m| m.nrows()))
            .or(self.doc.phi1.as_ref().map(|m| m.nrows()))
            .or(self.doc.theta1.as_ref().map(|m| m.nrows()))
            .or(self.doc.sigma.as_ref().map(|m| m.nrows()))
    }

    fn gammas(&self) -> CliResult<&CovSequence64> {
        self.gammas.as_ref().ok_or_else(|| CliError::validation("input provides no lagged covariances"))
    }

    fn lag(&self, k: usize) -> CliResult<&DMatrix<f64>> {
        self.gammas()?
            .lag(k)
            .ok_or_else(|| CliError::validation(format!("input provides no lag-{k} covariance")))
    }

    fn gamma0(&self) -> CliResult<DMatrix<f64>> {
        if let Some(g) = &self.doc.gamma0 {
            return Ok(g.clone());
        }
        Ok(self.lag(0)?.clone())
    }

    fn weights(&self, settings: &Settings) -> CliResult<Weights64> {
        let n = self.dim().ok_or_else(|| CliError::validation("cannot infer the number of assets"))?;
        let w = match &settings.weights {
            Some(w) => Weights64::new(w.clone())?,
            None => Weights64::equal(n)?,
        };
        if w.len() != n {
            return Err(volscale::Error::DimensionMismatch { expected: n, got: w.len() }.into());
        }
        Ok(w)
    }
}

/// Load a panel (estimating lags `0..=default_lag` unless overridden) or an estimates document.
fn load(settings: &Settings, default_lag: usize) -> CliResult<Loaded> {
    match read_source(settings.input.as_deref())? {
        Source::Panel(p) => {
            let max_lag = settings.max_lag.unwrap_or(default_lag.min(p.panel.len().saturating_sub(1)));
            let gammas = sample_acov(&p.panel, max_lag, settings.demean)?;
            Ok(Loaded { labels: p.panel.labels().to_vec(), sample: p.sample(), gammas: Some(gammas), doc: Document::default() })
        }
        Source::Document(mut doc) => {
            let gammas = doc.gammas.take().map(CovSequence64::new).transpose()?;
            let gammas = match (gammas, settings.max_lag) {
                (Some(g), Some(l)) if l < g.max_lag() => Some(g.truncated(l)),
                (g, _) => g,
            };
            let mut loaded = Loaded { labels: Vec::new(), sample: doc.sample.clone(), gammas, doc };
            let n = loaded.dim().ok_or_else(|| CliError::validation("document holds no matrices"))?;
            loaded.labels = match loaded.doc.labels.take() {
                Some(l) if l.len() != n => {
                    return Err(volscale::Error::DimensionMismatch { expected: n, got: l.len() }.into())
                }
                Some(l) => l,
                None => default_labels(n),
            };
            Ok(loaded)
        }
    }
}

fn max_horizon(settings: &Settings) -> usize {
    settings.horizons.iter().copied().max().unwrap_or(1)
}

fn quad(w: &Weights64, m: &DMatrix<f64>) -> f64 {
    let l = w.as_vector();
    l.dot(&(m * l))
}

fn portfolio_sigma(loaded: &Loaded, w: &Weights64) -> CliResult<f64> {
    let v = quad(w, &loaded.gamma0()?);
    if v > 0.0 {
        Ok(v.sqrt())
    } else {
        Err(volscale::Error::ZeroVariance.into())
    }
}

fn portfolio_rho1(loaded: &Loaded, w: &Weights64) -> CliResult<f64> {
    let acf = portfolio_acov(loaded.gammas()?, w)?.acf;
    acf.rho(1).ok_or_else(|| CliError::validation("input provides no lag-1 covariance"))
}

fn vma1_params(loaded: &Loaded) -> CliResult<(DMatrix<f64>, DMatrix<f64>)> {
    match (&loaded.doc.theta1, &loaded.doc.sigma) {
        (Some(t), Some(s)) => Ok((t.clone(), s.clone())),
        _ => {
            let fit = fit_vma1_moments(&loaded.gamma0()?, loaded.lag(1)?)?;
            Ok((fit.theta1, fit.sigma))
        }
    }
}

fn var1_params(loaded: &Loaded) -> CliResult<(DMatrix<f64>, DMatrix<f64>)> {
    let phi1 = match &loaded.doc.phi1 {
        Some(p) => p.clone(),
        None => fit_phi1_from_moments(&loaded.gamma0()?, loaded.lag(1)?)?.phi1,
    };
    let gamma0 = match (&loaded.doc.gamma0, &loaded.gammas, &loaded.doc.sigma) {
        (Some(g), _, _) => g.clone(),
        (None, Some(g), _) => g.gamma0().clone(),
        (None, None, Some(s)) => var1_stationary_cov(&phi1, s)?.gamma0,
        _ => return Err(CliError::validation("var1 needs gamma0, gammas, or sigma")),
    };
    Ok((phi1, gamma0))
}

fn d_cell(d: usize, settings: &Settings) -> String {
    if settings.annualize && d == 250 {
        "p.a.".into()
    } else {
        d.to_string()
    }
}

fn d_json(d: usize, settings: &Settings) -> Value {
    if settings.annualize && d == 250 {
        json!({ "d": d, "label": "p.a." })
    } else {
        json!({ "d": d })
    }
}

fn emit(report: &Report, settings: &Settings) -> CliResult<()> {
    match &settings.output {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write_report(report, settings.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            write_report(report, settings.format, &mut w)?;
        }
    }
    Ok(())
}

fn write_report(report: &Report, format: Format, out: &mut dyn Write) -> CliResult<()> {
    match format {
        Format::Csv => report.write_csv(out),
        Format::Json => report.write_json(out),
    }
}

fn labels_json(labels: &[String]) -> Value {
    json!(labels)
}

fn push_matrix(report: &mut Report, quantity: &str, lag: Option<usize>, labels: &[String], m: &DMatrix<f64>) {
    let lag = lag.map(|k| k.to_string()).unwrap_or_default();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            report.push(vec![quantity.into(), lag.clone(), labels[i].clone(), labels[j].clone(), fmt_num(m[(i, j)])]);
        }
    }
}

fn push_estimate(report: &mut Report, name: &str, est: &ContemporaneousEstimate<f64>, labels: &[String]) {
    push_matrix(report, name, None, labels, &est.matrix);
    report.push(vec![format!("{name}_min_eigenvalue"), String::new(), String::new(), String::new(), fmt_num(est.min_eigenvalue)]);
    report.push(vec![format!("{name}_psd"), String::new(), String::new(), String::new(), est.psd.to_string()]);
}

fn estimate_json(est: &ContemporaneousEstimate<f64>) -> Value {
    json!({ "matrix": matrix_json(&est.matrix), "min_eigenvalue": num(est.min_eigenvalue), "psd": est.psd })
}

pub fn estimate(settings: &Settings) -> CliResult<()> {
    let p = read_panel(settings.input.as_deref())?;
    let max_lag = settings.max_lag.unwrap_or(1);
    let cov = sample_acov(&p.panel, max_lag, settings.demean)?;
    let labels = p.panel.labels();
    let mut report = Report::new(p.sample(), &["quantity", "lag", "row", "col", "value"]);
    report.json.insert("labels".into(), labels_json(labels));
    report.json.insert("demean".into(), json!(settings.demean));
    report.json.insert("gammas".into(), Value::Array(cov.gammas().iter().map(matrix_json).collect()));
    for (k, g) in cov.gammas().iter().enumerate() {
        push_matrix(&mut report, "gamma", Some(k), labels, g);
    }
    if max_lag >= 1 {
        let naive = naive_contemporaneous(&cov)?;
        let nw = newey_west_lag1(&cov)?;
        push_estimate(&mut report, "naive", &naive, labels);
        push_estimate(&mut report, "newey_west", &nw, labels);
        report.json.insert("naive".into(), estimate_json(&naive));
        report.json.insert("newey_west".into(), estimate_json(&nw));
    }
    emit(&report, settings)
}

fn scaling_for(loaded: &Loaded, w: &Weights64, settings: &Settings) -> CliResult<(ScalingReport64, Value)> {
    let model = settings.model.unwrap_or(Model::Empirical);
    let rows_from = |sigma_1: f64, delta: &dyn Fn(usize) -> CliResult<f64>| -> CliResult<ScalingReport64> {
        let rows = settings
            .horizons
            .iter()
            .map(|&d| Ok(ScalingRow::from_delta(sigma_1, d, delta(d)?)))
            .collect::<CliResult<_>>()?;
        Ok(ScalingReport64 { sigma_1, rows })
    };
    match model {
        Model::Empirical => {
            let acf = portfolio_acov(loaded.gammas()?, w)?.acf;
            Ok((scaling_report(&acf, &settings.horizons)?, json!({})))
        }
        Model::Ma1 => {
            let (theta, boundary) = match loaded.doc.theta {
                Some(t) => (t, false),
                None => {
                    let fit = fit_ma1_from_rho(portfolio_rho1(loaded, w)?)?;
                    (fit.theta1, fit.boundary)
                }
            };
            let report = rows_from(portfolio_sigma(loaded, w)?, &|d| Ok(ma1_delta_d(theta, d)))?;
            Ok((report, json!({ "theta": num(theta), "boundary": boundary })))
        }
        Model::Ar1 => {
            let phi = match loaded.doc.phi {
                Some(p) => p,
                None => portfolio_rho1(loaded, w)?,
            };
            let report = rows_from(portfolio_sigma(loaded, w)?, &|d| Ok(ar1_delta_d(phi, d)?))?;
            Ok((report, json!({ "phi": num(phi) })))
        }
        Model::Vma1 => {
            let (theta1, sigma) = vma1_params(loaded)?;
            let gamma0 = &theta1 * &sigma * theta1.transpose() + &sigma;
            let s1 = quad(w, &gamma0);
            if s1 <= 0.0 {
                return Err(volscale::Error::ZeroVariance.into());
            }
            let report = rows_from(s1.sqrt(), &|d| Ok(vma1_delta_d(&theta1, &sigma, w, d)?))?;
            Ok((report, json!({ "theta1": matrix_json(&theta1), "sigma": matrix_json(&sigma) })))
        }
        Model::Var1 => {
            let (phi1, gamma0) = var1_params(loaded)?;
            let s1 = quad(w, &gamma0);
            if s1 <= 0.0 {
                return Err(volscale::Error::ZeroVariance.into());
            }
            let report = rows_from(s1.sqrt(), &|d| Ok(var1_delta_d(&phi1, &gamma0, w, d)?))?;
            Ok((report, json!({ "phi1": matrix_json(&phi1), "gamma0": matrix_json(&gamma0) })))
        }
    }
}

fn model_name(model: Model) -> &'static str {
    match model {
        Model::Empirical => "empirical",
        Model::Ma1 => "ma1",
        Model::Ar1 => "ar1",
        Model::Vma1 => "vma1",
        Model::Var1 => "var1",
    }
}

pub fn scale(settings: &Settings) -> CliResult<()> {
    let loaded = load(settings, max_horizon(settings) - 1)?;
    let w = loaded.weights(settings)?;
    let (scaling, params) = scaling_for(&loaded, &w, settings)?;
    let mut report = Report::new(loaded.sample.clone(), &["d", "sigma_d", "delta_d", "sqrt_d", "ratio"]);
    let model = settings.model.unwrap_or(Model::Empirical);
    report.json.insert("model".into(), json!(model_name(model)));
    report.json.insert("labels".into(), labels_json(&loaded.labels));
    report.json.insert("weights".into(), Value::Array(w.as_vector().iter().map(|&x| num(x)).collect()));
    if params.as_object().is_some_and(|m| !m.is_empty()) {
        report.json.insert("parameters".into(), params);
    }
    report.json.insert("sigma_1".into(), num(scaling.sigma_1));
    let mut rows = Vec::new();
    for r in &scaling.rows {
        report.push(vec![d_cell(r.d, settings), fmt_num(r.sigma_d), fmt_num(r.delta_d), fmt_num(r.sqrt_d), fmt_num(r.ratio)]);
        let mut row = d_json(r.d, settings);
        let obj = row.as_object_mut().expect("object");
        obj.insert("sigma_d".into(), num(r.sigma_d));
        obj.insert("delta_d".into(), num(r.delta_d));
        obj.insert("sqrt_d".into(), num(r.sqrt_d));
        obj.insert("ratio".into(), num(r.ratio));
        rows.push(row);
    }
    report.json.insert("rows".into(), Value::Array(rows));
    emit(&report, settings)
}

fn contribution_cov(loaded: &Loaded, settings: &Settings) -> CliResult<CovSequence64> {
    let model = settings.model.unwrap_or(Model::Empirical);
    match model {
        Model::Empirical => Ok(loaded.gammas()?.clone()),
        Model::Vma1 => {
            let (theta1, sigma) = vma1_params(loaded)?;
            Ok(varma_acov(&VarmaModel64::vma1(theta1, sigma)?, 1)?)
        }
        Model::Var1 => {
            let (phi1, gamma0) = var1_params(loaded)?;
            Ok(var1_sequence(&phi1, &gamma0, max_horizon(settings) - 1)?)
        }
        Model::Ma1 | Model::Ar1 => Err(CliError::validation(format!(
            "model `{}` describes the portfolio only and has no per-asset decomposition",
            model_name(model)
        ))),
    }
}

pub fn contrib(settings: &Settings) -> CliResult<()> {
    let loaded = load(settings, max_horizon(settings) - 1)?;
    let w = loaded.weights(settings)?;
    let cov = contribution_cov(&loaded, settings)?;
    let contrib = contribution_report(&cov, &w, &loaded.labels, &settings.horizons)?;
    let mut report =
        Report::new(loaded.sample.clone(), &["d", "asset", "contribution", "share", "delta", "sqrt_rule"]);
    report.json.insert("model".into(), json!(model_name(settings.model.unwrap_or(Model::Empirical))));
    report.json.insert("labels".into(), labels_json(&contrib.labels));
    report.json.insert("weights".into(), Value::Array(w.as_vector().iter().map(|&x| num(x)).collect()));
    let mut rows = Vec::new();
    for r in &contrib.rows {
        let total: f64 = r.contributions.iter().map(|&c| crate::format::round_sig(c)).sum();
        let sigma_d = crate::format::round_sig(r.sigma_d);
        if (total - sigma_d).abs() > ALLOCATION_TOL * sigma_d.abs() {
            return Err(CliError::Numerical(format!(
                "contributions at d = {} sum to {total}, portfolio volatility is {sigma_d}",
                r.d
            )));
        }
        let d = d_cell(r.d, settings);
        for (i, label) in contrib.labels.iter().enumerate() {
            report.push(vec![
                d.clone(),
                label.clone(),
                fmt_num(r.contributions[i]),
                fmt_num(r.shares[i]),
                r.deltas[i].map(fmt_num).unwrap_or_default(),
                fmt_num(r.sqrt_rule[i]),
            ]);
        }
        let sqrt_total: f64 = r.sqrt_rule.iter().sum();
        report.push(vec![d, "portfolio".into(), fmt_num(r.sigma_d), "1".into(), String::new(), fmt_num(sqrt_total)]);
        let mut row = d_json(r.d, settings);
        let obj = row.as_object_mut().expect("object");
        obj.insert("sigma_d".into(), num(r.sigma_d));
        obj.insert("contributions".into(), Value::Array(r.contributions.iter().map(|&x| num(x)).collect()));
        obj.insert("shares".into(), Value::Array(r.shares.iter().map(|&x| num(x)).collect()));
        obj.insert("deltas".into(), Value::Array(r.deltas.iter().map(|x| x.map_or(Value::Null, num)).collect()));
        obj.insert("sqrt_rule".into(), Value::Array(r.sqrt_rule.iter().map(|&x| num(x)).collect()));
        rows.push(row);
    }
    report.json.insert("rows".into(), Value::Array(rows));
    emit(&report, settings)
}

pub fn fit(settings: &Settings) -> CliResult<()> {
    let loaded = load(settings, 1)?;
    let model = settings.model.unwrap_or(Model::Var1);
    let mut report = Report::new(loaded.sample.clone(), &["parameter", "row", "col", "value"]);
    report.json.insert("model".into(), json!(model_name(model)));
    report.json.insert("labels".into(), labels_json(&loaded.labels));
    let labels = loaded.labels.clone();
    let push_m = |report: &mut Report, name: &str, m: &DMatrix<f64>| {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                report.push(vec![name.into(), labels[i].clone(), labels[j].clone(), fmt_num(m[(i, j)])]);
            }
        }
    };
    let scalar = |report: &mut Report, name: &str, v: String| report.push(vec![name.into(), String::new(), String::new(), v]);
    let gamma0 = loaded.gamma0()?;
    match model {
        Model::Var1 => {
            let fit = fit_phi1_from_moments(&gamma0, loaded.lag(1)?)?;
            if !fit.stable {
                log::warn!("fitted VAR(1) is not stable (spectral radius {})", fit.spectral_radius);
            }
            push_m(&mut report, "phi1", &fit.phi1);
            scalar(&mut report, "spectral_radius", fmt_num(fit.spectral_radius));
            scalar(&mut report, "stable", fit.stable.to_string());
            report.json.insert("phi1".into(), matrix_json(&fit.phi1));
            report.json.insert("spectral_radius".into(), num(fit.spectral_radius));
            report.json.insert("stable".into(), json!(fit.stable));
        }
        Model::Vma1 => {
            let fit = fit_vma1_moments(&gamma0, loaded.lag(1)?)?;
            push_m(&mut report, "theta1", &fit.theta1);
            push_m(&mut report, "sigma", &fit.sigma);
            scalar(&mut report, "iterations", fit.iterations.to_string());
            report.json.insert("theta1".into(), matrix_json(&fit.theta1));
            report.json.insert("sigma".into(), matrix_json(&fit.sigma));
            report.json.insert("iterations".into(), json!(fit.iterations));
        }
        Model::Ma1 => {
            let w = loaded.weights(settings)?;
            let fit = fit_ma1_from_rho(portfolio_rho1(&loaded, &w)?)?;
            scalar(&mut report, "theta", fmt_num(fit.theta1));
            scalar(&mut report, "boundary", fit.boundary.to_string());
            report.json.insert("weights".into(), Value::Array(w.as_vector().iter().map(|&x| num(x)).collect()));
            report.json.insert("theta".into(), num(fit.theta1));
            report.json.insert("boundary".into(), json!(fit.boundary));
        }
        Model::Ar1 => {
            let w = loaded.weights(settings)?;
            let phi = portfolio_rho1(&loaded, &w)?;
            scalar(&mut report, "phi", fmt_num(phi));
            report.json.insert("weights".into(), Value::Array(w.as_vector().iter().map(|&x| num(x)).collect()));
            report.json.insert("phi".into(), num(phi));
        }
        Model::Empirical => return Err(CliError::validation("`fit` needs a parametric model")),
    }
    push_m(&mut report, "gamma0", &gamma0);
    report.json.insert("gamma0".into(), matrix_json(&gamma0));
    emit(&report, settings)
}

pub fn compare(settings: &Settings) -> CliResult<()> {
    let loaded = load(settings, 1)?;
    let w = loaded.weights(settings)?;
    let gamma0 = loaded.gamma0()?;
    let gamma1 = loaded.lag(1)?;
    let mut report = Report::new(
        loaded.sample.clone(),
        &["d", "sigma_closing", "sigma_naive", "sigma_newey_west", "ratio_naive", "ratio_newey_west"],
    );
    report.json.insert("labels".into(), labels_json(&loaded.labels));
    report.json.insert("weights".into(), Value::Array(w.as_vector().iter().map(|&x| num(x)).collect()));
    let mut rows = Vec::new();
    for &d in &settings.horizons {
        let c = contemporaneous_ratio(&gamma0, gamma1, &w, d)?;
        report.push(vec![
            d_cell(d, settings),
            fmt_num(c.sigma_closing),
            fmt_num(c.sigma_naive),
            fmt_num(c.sigma_newey_west),
            fmt_num(c.ratio_naive),
            fmt_num(c.ratio_newey_west),
        ]);
        let mut row = d_json(d, settings);
        let obj = row.as_object_mut().expect("object");
        obj.insert("sigma_closing".into(), num(c.sigma_closing));
        obj.insert("sigma_naive".into(), num(c.sigma_naive));
        obj.insert("sigma_newey_west".into(), num(c.sigma_newey_west));
        obj.insert("ratio_naive".into(), num(c.ratio_naive));
        obj.insert("ratio_newey_west".into(), num(c.ratio_newey_west));
        rows.push(row);
    }
    report.json.insert("rows".into(), Value::Array(rows));
    emit(&report, settings)
}

/// Smallest grid (up to 10 000 steps) that places every closing fraction on a step.
fn default_steps(fractions: &[f64]) -> CliResult<usize> {
    (1..=10_000usize)
        .find(|&s| fractions.iter().all(|&x| ((x * s as f64) - (x * s as f64).round()).abs() < 1e-9))
        .ok_or_else(|| CliError::validation("closing fractions need an explicit --steps-per-day"))
}

pub fn simulate(settings: &Settings) -> CliResult<()> {
    let spec = read_spec(settings.input.as_deref())?;
    let steps = match settings.steps_per_day {
        Some(s) => s,
        None => default_steps(spec.closing_fractions())?,
    };
    let panel = simulate_panel(&spec, settings.days, steps, settings.seed)?;
    let labels = spec.labels().to_vec();
    let sample = SampleInfo::default();

    let mut out = Report::new(sample.clone(), &labels.iter().map(String::as_str).collect::<Vec<_>>());
    let values = panel.values();
    for t in 0..values.nrows() {
        out.push((0..values.ncols()).map(|j| fmt_num(values[(t, j)])).collect());
    }
    out.json.insert("labels".into(), labels_json(&labels));
    out.json.insert("seed".into(), json!(settings.seed));
    out.json.insert("steps_per_day".into(), json!(steps));
    out.json.insert(
        "returns".into(),
        Value::Array((0..values.nrows()).map(|t| Value::Array((0..values.ncols()).map(|j| num(values[(t, j)])).collect())).collect()),
    );
    emit(&out, settings)?;

    let theory = theoretical_closing_cov(&spec);
    let mut th = Report::new(sample, &["quantity", "lag", "row", "col", "value"]);
    push_matrix(&mut th, "gamma", Some(0), &labels, &theory.gamma0);
    push_matrix(&mut th, "gamma", Some(1), &labels, &theory.gamma1);
    th.json.insert("labels".into(), labels_json(&labels));
    th.json.insert("gammas".into(), json!([matrix_json(&theory.gamma0), matrix_json(&theory.gamma1)]));
    if settings.output.is_some() {
        write_report(&th, settings.format, &mut std::io::stdout().lock())
    } else {
        write_report(&th, settings.format, &mut std::io::stderr().lock())
    }
}
