//! Sample lagged covariances and contemporaneous covariance estimators.

use nalgebra::DMatrix;

use crate::linalg;
use crate::{AcfSequence, CovSequence, Error, PanelReturns, Real, Result};

/// `Γ̂(k)_ij = (1/T) Σ_{t=k+1}^{T} (x_{t,i} − m_i)(x_{t−k,j} − m_j)`.
///
/// The divisor is `T` for every lag, which keeps the block-Toeplitz matrix of
/// estimates positive semidefinite.
pub fn sample_acov<T: Real>(panel: &PanelReturns<T>, max_lag: usize, demean: bool) -> Result<CovSequence<T>> {
    let len = panel.len();
    if max_lag >= len {
        return Err(Error::LagTooLarge { max_lag, len });
    }
    let x = centered(panel.values(), demean);
    let n = x.ncols();
    let denom = T::count(len);
    let gammas = (0..=max_lag)
        .map(|k| {
            let mut g = DMatrix::<T>::zeros(n, n);
            for t in k..len {
                for i in 0..n {
                    let xi = x[(t, i)];
                    for j in 0..n {
                        g[(i, j)] += xi * x[(t - k, j)];
                    }
                }
            }
            g / denom
        })
        .collect();
    CovSequence::new(gammas)
}

fn centered<T: Real>(values: &DMatrix<T>, demean: bool) -> DMatrix<T> {
    let mut x = values.clone();
    if demean {
        let len = T::count(values.nrows());
        for mut col in x.column_iter_mut() {
            let mean = col.iter().fold(T::zero(), |a, &b| a + b) / len;
            col.iter_mut().for_each(|v| *v -= mean);
        }
    }
    x
}

/// Univariate sample autocovariances.
pub fn sample_acf<T: Real>(series: &[T], max_lag: usize, demean: bool) -> Result<AcfSequence<T>> {
    let len = series.len();
    if len < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: len });
    }
    if max_lag >= len {
        return Err(Error::LagTooLarge { max_lag, len });
    }
    if let Some(i) = series.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let mean = if demean {
        series.iter().fold(T::zero(), |a, &b| a + b) / T::count(len)
    } else {
        T::zero()
    };
    let denom = T::count(len);
    let gamma = (0..=max_lag)
        .map(|k| {
            (k..len).fold(T::zero(), |acc, t| acc + (series[t] - mean) * (series[t - k] - mean)) / denom
        })
        .collect();
    AcfSequence::new(gamma)
}

/// A contemporaneous covariance estimate with its PSD diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ContemporaneousEstimate<T: Real> {
    pub matrix: DMatrix<T>,
    pub min_eigenvalue: T,
    pub psd: bool,
}

impl<T: Real> ContemporaneousEstimate<T> {
    fn new(matrix: DMatrix<T>) -> Self {
        let (min_eigenvalue, psd) = linalg::psd_check(&matrix);
        ContemporaneousEstimate { matrix, min_eigenvalue, psd }
    }
}

fn lag_one<T: Real>(cov: &CovSequence<T>) -> Result<&DMatrix<T>> {
    cov.lag(1)
        .ok_or_else(|| Error::InvalidArgument("estimator needs the lag-one covariance".into()))
}

/// `Γ(0) + Γ(1) + Γ(1)ᵀ`; may fail to be PSD, which is flagged.
pub fn naive_contemporaneous<T: Real>(cov: &CovSequence<T>) -> Result<ContemporaneousEstimate<T>> {
    let g1 = lag_one(cov)?;
    let m = linalg::symmetrize(cov.gamma0()) + (g1 + g1.transpose());
    Ok(ContemporaneousEstimate::new(m))
}

/// Newey-West estimator up to lag one, `Γ(0) + ½(Γ(1) + Γ(1)ᵀ)`.
pub fn newey_west_lag1<T: Real>(cov: &CovSequence<T>) -> Result<ContemporaneousEstimate<T>> {
    let g1 = lag_one(cov)?;
    let m = linalg::symmetrize(cov.gamma0()) + (g1 + g1.transpose()) * T::lit(0.5);
    Ok(ContemporaneousEstimate::new(m))
}
