//! Command-line arguments and the optional key-value config file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "volscale", version, about = "Volatility scaling and risk attribution under serial correlation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate lagged covariance matrices and contemporaneous covariance proxies.
    Estimate(Options),
    /// Tabulate δ(d) and σ(λ,d) for a list of horizons.
    Scale(Options),
    /// Euler risk contributions per asset and horizon.
    Contrib(Options),
    /// Fit model parameters from estimated moments.
    Fit(Options),
    /// Simulate closing-time returns from a market specification.
    Simulate(Options),
    /// Compare closing-time volatility with contemporaneous proxies.
    Compare(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Empirical,
    Ma1,
    Ar1,
    Vma1,
    Var1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Input file: CSV return panel, JSON estimates, or JSON market spec (simulate). Reads stdin if absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file. Writes stdout if absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Comma-separated portfolio weights. Defaults to equal weights.
    #[arg(long, allow_hyphen_values = true)]
    pub weights: Option<String>,
    /// Comma-separated holding periods in days.
    #[arg(long)]
    pub horizons: Option<String>,
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Largest lag estimated from a panel.
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Subtract sample means before estimating covariances.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub demean: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps_per_day: Option<usize>,
    /// Number of simulated days.
    #[arg(long)]
    pub days: Option<usize>,
    /// Label the 250-day horizon as "p.a.".
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub annualize: Option<bool>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Flat key-value config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum List {
    Text(String),
    Numbers(Vec<f64>),
}

impl List {
    fn into_text(self) -> String {
        match self {
            List::Text(s) => s,
            List::Numbers(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    weights: Option<List>,
    horizons: Option<List>,
    model: Option<Model>,
    max_lag: Option<usize>,
    demean: Option<bool>,
    seed: Option<u64>,
    steps_per_day: Option<usize>,
    days: Option<usize>,
    annualize: Option<bool>,
    format: Option<Format>,
}

fn load_config(path: &Path) -> CliResult<Config> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::validation(format!("config {}: {}", path.display(), e.message())))
}

pub const DEFAULT_HORIZONS: [usize; 7] = [1, 2, 5, 10, 30, 90, 250];

/// Options after merging flags over the config file and applying defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub weights: Option<Vec<f64>>,
    pub horizons: Vec<usize>,
    pub model: Option<Model>,
    pub max_lag: Option<usize>,
    pub demean: bool,
    pub seed: u64,
    pub steps_per_day: Option<usize>,
    pub days: usize,
    pub annualize: bool,
    pub format: Format,
}

impl Settings {
    pub fn resolve(opts: Options) -> CliResult<Self> {
        let cfg = match &opts.config {
            Some(p) => load_config(p)?,
            None => Config::default(),
        };
        let weights = opts.weights.or(cfg.weights.map(List::into_text)).map(|s| parse_weights(&s)).transpose()?;
        let horizons = match opts.horizons.or(cfg.horizons.map(List::into_text)) {
            Some(s) => parse_horizons(&s)?,
            None => DEFAULT_HORIZONS.to_vec(),
        };
        Ok(Settings {
            input: opts.input.or(cfg.input),
            output: opts.output.or(cfg.output),
            weights,
            horizons,
            model: opts.model.or(cfg.model),
            max_lag: opts.max_lag.or(cfg.max_lag),
            demean: opts.demean.or(cfg.demean).unwrap_or(true),
            seed: opts.seed.or(cfg.seed).unwrap_or(0),
            steps_per_day: opts.steps_per_day.or(cfg.steps_per_day),
            days: opts.days.or(cfg.days).unwrap_or(1000),
            annualize: opts.annualize.or(cfg.annualize).unwrap_or(false),
            format: opts.format.or(cfg.format).unwrap_or(Format::Csv),
        })
    }
}

fn split(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

pub fn parse_weights(s: &str) -> CliResult<Vec<f64>> {
    let w = split(s)
        .map(|t| t.parse::<f64>().map_err(|_| CliError::validation(format!("weight `{t}` is not a number"))))
        .collect::<CliResult<Vec<_>>>()?;
    if w.is_empty() {
        return Err(CliError::validation("empty weight list"));
    }
    Ok(w)
}

pub fn parse_horizons(s: &str) -> CliResult<Vec<usize>> {
    let h = split(s)
        .map(|t| {
            let d: f64 = t.parse().map_err(|_| CliError::validation(format!("horizon `{t}` is not a number")))?;
            if d < 1.0 || d.fract() != 0.0 {
                return Err(CliError::validation(format!("horizon `{t}` must be a positive integer")));
            }
            Ok(d as usize)
        })
        .collect::<CliResult<Vec<_>>>()?;
    if h.is_empty() {
        return Err(CliError::validation("empty horizon list"));
    }
    Ok(h)
}
