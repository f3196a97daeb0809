//! Closing-time returns of a correlated Brownian motion observed at
//! market-specific closing fractions of the day.
//!
//! Asset `i` closes at fraction `x_i` of each day, so its day-`t` return is
//! the increment of `B^i` over `[t−1+x_i, t+x_i]`. Non-overlapping windows
//! produce lag-one cross-covariance and no covariance beyond lag one.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::linalg;
use crate::{CovSequence, Error, PanelReturns, Real, Result};

/// Per-unit-time covariance `Σ` and sorted closing fractions `x_i ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec<T: Real> {
    sigma: DMatrix<T>,
    closing_fractions: Vec<T>,
    labels: Vec<String>,
}

impl<T: Real> MarketSpec<T> {
    pub fn new(sigma: DMatrix<T>, closing_fractions: Vec<T>) -> Result<Self> {
        let n = closing_fractions.len();
        let labels = (1..=n).map(|i| format!("asset{i}")).collect();
        Self::with_labels(sigma, closing_fractions, labels)
    }

    pub fn with_labels(sigma: DMatrix<T>, closing_fractions: Vec<T>, labels: Vec<String>) -> Result<Self> {
        let n = closing_fractions.len();
        if n == 0 {
            return Err(Error::InvalidArgument("market spec has no assets".into()));
        }
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sigma.nrows() });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
        }
        if sigma.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite covariance entry".into()));
        }
        if !linalg::is_symmetric(&sigma) {
            return Err(Error::NotSymmetric);
        }
        linalg::require_psd(&sigma)?;
        for (i, &x) in closing_fractions.iter().enumerate() {
            if !(x >= T::zero() && x < T::one()) {
                return Err(Error::InvalidArgument(format!(
                    "closing fraction {x} of asset {i} is outside [0, 1)"
                )));
            }
            if i > 0 && x < closing_fractions[i - 1] {
                return Err(Error::InvalidArgument("closing fractions must be sorted ascending".into()));
            }
        }
        Ok(MarketSpec { sigma, closing_fractions, labels })
    }

    pub fn sigma(&self) -> &DMatrix<T> {
        &self.sigma
    }

    pub fn closing_fractions(&self) -> &[T] {
        &self.closing_fractions
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.closing_fractions.len()
    }
}

/// Population `Γ(0)` and `Γ(1)` of the closing-time returns. `Γ(k) = 0` for `k ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosingCov<T: Real> {
    pub gamma0: DMatrix<T>,
    pub gamma1: DMatrix<T>,
}

impl<T: Real> ClosingCov<T> {
    /// `Γ(0..=max_lag)`, zero beyond lag one.
    pub fn sequence(&self, max_lag: usize) -> Result<CovSequence<T>> {
        let n = self.gamma0.nrows();
        let gammas = (0..=max_lag)
            .map(|k| match k {
                0 => self.gamma0.clone(),
                1 => self.gamma1.clone(),
                _ => DMatrix::zeros(n, n),
            })
            .collect();
        CovSequence::new(gammas)
    }
}

/// `Γ(0)_ij = σ_ij(1 − |x_i − x_j|)`, `Γ(1)_ij = (x_j − x_i)σ_ij` when `x_j > x_i`.
pub fn theoretical_closing_cov<T: Real>(spec: &MarketSpec<T>) -> ClosingCov<T> {
    let x = &spec.closing_fractions;
    let s = &spec.sigma;
    let n = spec.dim();
    let gamma0 = DMatrix::from_fn(n, n, |i, j| s[(i, j)] * (T::one() - (x[i] - x[j]).abs()));
    let gamma1 = DMatrix::from_fn(n, n, |i, j| {
        if x[j] > x[i] {
            (x[j] - x[i]) * s[(i, j)]
        } else {
            T::zero()
        }
    });
    ClosingCov { gamma0, gamma1 }
}

/// Gaussian conditional law of `X_{t+1}` given `X_t`:
/// coefficient `Γ(1)Γ(0)⁻¹` and covariance `Γ(0) − Γ(1)Γ(0)⁻¹Γ(1)ᵀ`.
pub fn conditional_params<T: Real>(spec: &MarketSpec<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let ClosingCov { gamma0, gamma1 } = theoretical_closing_cov(spec);
    let inv = gamma0.clone().try_inverse().ok_or(Error::Singular)?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    let coef = &gamma1 * inv;
    let cond = linalg::symmetrize(&(&gamma0 - &coef * gamma1.transpose()));
    Ok((coef, cond))
}

/// Grid index `k_i = x_i·S` of each closing fraction.
fn grid_offsets<T: Real>(spec: &MarketSpec<T>, steps: usize) -> Result<Vec<usize>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps per day must be positive".into()));
    }
    spec.closing_fractions
        .iter()
        .enumerate()
        .map(|(asset, &x)| {
            let xf = x.to_f64_lossy();
            let k = (xf * steps as f64).round();
            if (xf - k / steps as f64).abs() > 1e-12 {
                return Err(Error::OffGrid { asset, fraction: xf, steps });
            }
            Ok(k as usize)
        })
        .collect()
}

/// Random stream for grid day `day` (day 0 is the day before the first return).
fn day_rng(seed: u64, day: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(day as u64);
    rng
}

/// Intraday Brownian increments of grid day `day`: an `S × n` matrix whose rows
/// are `B(day + (s+1)/S) − B(day + s/S)`.
pub fn day_increments<T: Real>(factor: &DMatrix<T>, steps: usize, seed: u64, day: usize) -> DMatrix<T> {
    let n = factor.nrows();
    let mut rng = day_rng(seed, day);
    let scale = T::lit((1.0 / steps as f64).sqrt());
    let mut out = DMatrix::zeros(steps, n);
    let mut z = vec![T::zero(); n];
    for s in 0..steps {
        for zi in z.iter_mut() {
            let draw: f64 = StandardNormal.sample(&mut rng);
            *zi = T::lit(draw) * scale;
        }
        for i in 0..n {
            out[(s, i)] = (0..n).fold(T::zero(), |acc, j| acc + factor[(i, j)] * z[j]);
        }
    }
    out
}

/// Simulates `days` closing-time returns on a grid of `steps_per_day` steps.
///
/// Each grid day draws from its own ChaCha stream derived from `seed`, so the
/// output does not depend on how days are scheduled across threads.
pub fn simulate_panel<T: Real>(
    spec: &MarketSpec<T>,
    days: usize,
    steps_per_day: usize,
    seed: u64,
) -> Result<PanelReturns<T>> {
    if days < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: days });
    }
    let offsets = grid_offsets(spec, steps_per_day)?;
    let factor = linalg::psd_factor(&spec.sigma)?;
    let n = spec.dim();

    // (before close, after close) partial sums per grid day 0..=days
    let parts: Vec<(Vec<T>, Vec<T>)> = (0..=days)
        .into_par_iter()
        .map(|day| {
            let inc = day_increments(&factor, steps_per_day, seed, day);
            let mut before = vec![T::zero(); n];
            let mut after = vec![T::zero(); n];
            for i in 0..n {
                for s in 0..steps_per_day {
                    if s < offsets[i] {
                        before[i] += inc[(s, i)];
                    } else {
                        after[i] += inc[(s, i)];
                    }
                }
            }
            (before, after)
        })
        .collect();

    let values = DMatrix::from_fn(days, n, |t, i| parts[t].1[i] + parts[t + 1].0[i]);
    PanelReturns::new(values, spec.labels.clone())
}
