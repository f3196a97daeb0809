//! Euler allocation of portfolio volatility to assets, for one period and for
//! `d`-period holding horizons under serial correlation.

use nalgebra::{DMatrix, DVector};

use crate::scaling::{self, horizon_sum};
use crate::types::ContributionRow;
use crate::{AcfSequence, ContributionReport, CovSequence, Error, Real, Result, Weights};

/// Portfolio autocovariances `γ(k) = λᵀΓ(k)λ` together with the per-asset
/// covariances `γ_i(k) = (Γ(k)λ)_i` they are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioAcov<T: Real> {
    pub acf: AcfSequence<T>,
    /// `asset[k][i] = γ_i(k)`.
    pub asset: Vec<DVector<T>>,
}

impl<T: Real> PortfolioAcov<T> {
    pub fn max_lag(&self) -> usize {
        self.asset.len() - 1
    }
}

pub fn portfolio_acov<T: Real>(cov: &CovSequence<T>, w: &Weights<T>) -> Result<PortfolioAcov<T>> {
    w.check_dim(cov.dim())?;
    let lambda = w.as_vector();
    let asset: Vec<DVector<T>> = cov.gammas().iter().map(|g| g * lambda).collect();
    let gamma = asset.iter().map(|v| lambda.dot(v)).collect();
    Ok(PortfolioAcov { acf: AcfSequence::new(gamma)?, asset })
}

/// One-period Euler contributions `σ_i(λ) = λ_i (Γ(0)λ)_i / √(λᵀΓ(0)λ)`.
pub fn euler_contrib_1d<T: Real>(cov0: &DMatrix<T>, w: &Weights<T>) -> Result<DVector<T>> {
    w.check_dim(cov0.nrows())?;
    let lambda = w.as_vector();
    let marginal = cov0 * lambda;
    let var = lambda.dot(&marginal);
    if !(var > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let sigma = var.sqrt();
    Ok(lambda.component_mul(&marginal) / sigma)
}

fn asset_horizon_sum<T: Real>(pacov: &PortfolioAcov<T>, d: usize, i: usize) -> T {
    horizon_sum(d, pacov.max_lag(), |k| pacov.asset[k][i])
}

/// `d`-period contributions `σ_i(λ,d) = λ_i/σ(λ,d)·(d γ_i(0) + 2Σ(d−k)γ_i(k))`.
pub fn contrib_d<T: Real>(cov: &CovSequence<T>, w: &Weights<T>, d: usize) -> Result<ContributionRow<T>> {
    let pacov = portfolio_acov(cov, w)?;
    contrib_d_from(&pacov, w, d)
}

pub(crate) fn contrib_d_from<T: Real>(
    pacov: &PortfolioAcov<T>,
    w: &Weights<T>,
    d: usize,
) -> Result<ContributionRow<T>> {
    let sigma_d = scaling::sigma_d_from_acov(&pacov.acf, d)?;
    if !(sigma_d > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let lambda = w.as_vector();
    let n = lambda.len();
    let contributions: Vec<T> =
        (0..n).map(|i| lambda[i] / sigma_d * asset_horizon_sum(pacov, d, i)).collect();
    let shares = contributions.iter().map(|&c| c / sigma_d).collect();
    let deltas = deltas_from(pacov, d)?;
    let sigma_1 = pacov.acf.variance().sqrt();
    let sqrt_d = T::count(d).sqrt();
    let sqrt_rule = (0..n).map(|i| lambda[i] * pacov.asset[0][i] / sigma_1 * sqrt_d).collect();
    Ok(ContributionRow { d, sigma_d, contributions, shares, deltas, sqrt_rule })
}

/// Tolerance under which `γ_i(0)` counts as zero, relative to the largest `|γ_j(0)|`.
const UNCORRELATED_TOL: f64 = 1e-13;

fn deltas_from<T: Real>(pacov: &PortfolioAcov<T>, d: usize) -> Result<Vec<Option<T>>> {
    let delta = scaling::delta_d(&pacov.acf, d)?;
    let g0 = &pacov.asset[0];
    let scale = g0.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let floor = T::lit(UNCORRELATED_TOL) * scale;
    Ok((0..g0.len())
        .map(|i| {
            if g0[i].abs() <= floor {
                None
            } else {
                Some(asset_horizon_sum(pacov, d, i) / g0[i] / delta)
            }
        })
        .collect())
}

/// Contribution scaling factors `δ(i,d)` with `σ_i(λ,d) = σ_i(λ)·δ(i,d)`.
/// `None` for assets uncorrelated with the portfolio (`γ_i(0) = 0`).
pub fn delta_i_d<T: Real>(cov: &CovSequence<T>, w: &Weights<T>, d: usize) -> Result<Vec<Option<T>>> {
    let pacov = portfolio_acov(cov, w)?;
    deltas_from(&pacov, d)
}

pub fn contribution_report<T: Real>(
    cov: &CovSequence<T>,
    w: &Weights<T>,
    labels: &[String],
    horizons: &[usize],
) -> Result<ContributionReport<T>> {
    if labels.len() != cov.dim() {
        return Err(Error::DimensionMismatch { expected: cov.dim(), got: labels.len() });
    }
    let pacov = portfolio_acov(cov, w)?;
    let rows = horizons.iter().map(|&d| contrib_d_from(&pacov, w, d)).collect::<Result<_>>()?;
    Ok(ContributionReport { labels: labels.to_vec(), rows })
}
