//! Scaling one-period portfolio volatility to `d` periods from its
//! autocovariance function, with closed forms for MA(q) and AR(1).

use nalgebra::DMatrix;

use crate::types::{ScalingReport, ScalingRow};
use crate::{varma, AcfSequence, Error, Real, Result, VarmaModel};

/// Univariate ARMA(p, q) with innovation variance `sigma2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarArma<T: Real> {
    pub phi: Vec<T>,
    pub theta: Vec<T>,
    pub sigma2: T,
}

impl<T: Real> ScalarArma<T> {
    pub fn new(phi: Vec<T>, theta: Vec<T>, sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument("innovation variance must be positive".into()));
        }
        if phi.iter().chain(theta.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite ARMA coefficient".into()));
        }
        let model = ScalarArma { phi, theta, sigma2 };
        if !model.phi.is_empty() {
            let rho = model.to_varma()?.spectral_radius();
            if rho >= T::lit(crate::linalg::STABILITY_THRESHOLD) {
                return Err(Error::NonStationary { spectral_radius: rho.to_f64_lossy() });
            }
        }
        Ok(model)
    }

    pub fn ma(theta: Vec<T>, sigma2: T) -> Result<Self> {
        Self::new(Vec::new(), theta, sigma2)
    }

    pub fn to_varma(&self) -> Result<VarmaModel<T>> {
        let one = |x: T| DMatrix::from_element(1, 1, x);
        VarmaModel::new(
            self.phi.iter().map(|&x| one(x)).collect(),
            self.theta.iter().map(|&x| one(x)).collect(),
            one(self.sigma2),
        )
    }

    /// Autocovariances of a general ARMA(p, q) through the Yule-Walker solver.
    pub fn acov(&self, max_lag: usize) -> Result<AcfSequence<T>> {
        if self.phi.is_empty() {
            return ma_q_acov(self, max_lag);
        }
        let cov = varma::varma_acov(&self.to_varma()?, max_lag)?;
        AcfSequence::new(cov.gammas().iter().map(|g| g[(0, 0)]).collect())
    }
}

/// `d·v(0) + 2·Σ_{k=1}^{d−1} (d−k)·v(k)`, with missing lags counted as zero.
pub(crate) fn horizon_sum<T: Real>(d: usize, available: usize, lag: impl Fn(usize) -> T) -> T {
    if d > 1 && available < d - 1 {
        log::warn!(
            "holding period {d} needs {} lags but only {available} are available; \
             missing autocovariances are treated as zero",
            d - 1
        );
    }
    let df = T::count(d);
    let mut total = df * lag(0);
    let two = T::lit(2.0);
    for k in 1..d.min(available + 1) {
        total += two * T::count(d - k) * lag(k);
    }
    total
}

fn checked_sqrt<T: Real>(value: T, d: usize) -> Result<T> {
    if value < T::zero() || !value.is_finite() {
        return Err(Error::NegativeRadicand { d, value: value.to_f64_lossy() });
    }
    Ok(value.sqrt())
}

fn require_horizon(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument("holding period must be at least 1".into()));
    }
    Ok(())
}

/// Volatility of the `d`-period sum of a stationary series with the given
/// autocovariances.
pub fn sigma_d_from_acov<T: Real>(acf: &AcfSequence<T>, d: usize) -> Result<T> {
    require_horizon(d)?;
    if d == 1 {
        return Ok(acf.variance().sqrt());
    }
    let g = acf.gammas();
    checked_sqrt(horizon_sum(d, acf.max_lag(), |k| g[k]), d)
}

/// Scaling factor `δ(d)` with `σ(d) = σ(1)·δ(d)`.
pub fn delta_d<T: Real>(acf: &AcfSequence<T>, d: usize) -> Result<T> {
    require_horizon(d)?;
    if d == 1 {
        return Ok(T::one());
    }
    let g = acf.gammas();
    let g0 = acf.variance();
    checked_sqrt(horizon_sum(d, acf.max_lag(), |k| if k == 0 { T::one() } else { g[k] / g0 }), d)
}

/// Upper bound `√d` on `δ(d)/√d` for any autocorrelation sequence.
pub fn sqrt_rule_error_bound<T: Real>(d: usize) -> Result<T> {
    if d < 2 {
        return Err(Error::InvalidArgument("error bound needs d >= 2".into()));
    }
    Ok(T::count(d).sqrt())
}

/// Autocovariances of an MA(q): `γ(k) = σ²·Σ_{j=0}^{q−k} θ_j θ_{j+k}`, `θ_0 = 1`.
pub fn ma_q_acov<T: Real>(model: &ScalarArma<T>, max_lag: usize) -> Result<AcfSequence<T>> {
    if !model.phi.is_empty() {
        return Err(Error::InvalidArgument("MA(q) autocovariance needs p = 0".into()));
    }
    let mut coeffs = Vec::with_capacity(model.theta.len() + 1);
    coeffs.push(T::one());
    coeffs.extend_from_slice(&model.theta);
    let q = model.theta.len();
    let gamma = (0..=max_lag)
        .map(|k| {
            if k > q {
                return T::zero();
            }
            let s = (0..=q - k).fold(T::zero(), |acc, j| acc + coeffs[j] * coeffs[j + k]);
            model.sigma2 * s
        })
        .collect();
    AcfSequence::new(gamma)
}

/// `δ(d)` of an MA(1): `√(d + 2(d−1)·θ/(1+θ²))`.
pub fn ma1_delta_d<T: Real>(theta1: T, d: usize) -> T {
    let rho1 = theta1 / (T::one() + theta1 * theta1);
    let df = T::count(d);
    (df + T::lit(2.0) * (df - T::one()) * rho1).sqrt()
}

fn require_ar1_stationary<T: Real>(phi1: T) -> Result<()> {
    if !phi1.is_finite() || phi1.abs() >= T::one() {
        return Err(Error::NonStationary { spectral_radius: phi1.abs().to_f64_lossy() });
    }
    Ok(())
}

/// Autocovariances `γ(k) = φ^k σ²/(1−φ²)` of an AR(1).
pub fn ar1_acov<T: Real>(phi1: T, sigma2: T, max_lag: usize) -> Result<AcfSequence<T>> {
    require_ar1_stationary(phi1)?;
    let g0 = sigma2 / (T::one() - phi1 * phi1);
    let mut gamma = Vec::with_capacity(max_lag + 1);
    let mut g = g0;
    for _ in 0..=max_lag {
        gamma.push(g);
        g *= phi1;
    }
    AcfSequence::new(gamma)
}

/// Closed-form `δ(d)` of an AR(1):
/// `√(d + 2φ/(φ−1)²·(d(1−φ) + φ^d − 1))`.
pub fn ar1_delta_d<T: Real>(phi1: T, d: usize) -> Result<T> {
    require_ar1_stationary(phi1)?;
    require_horizon(d)?;
    let df = T::count(d);
    if phi1.is_zero() {
        return Ok(df.sqrt());
    }
    let one = T::one();
    let pow = phi1.powi(d as i32);
    let radicand =
        df + T::lit(2.0) * phi1 / ((phi1 - one) * (phi1 - one)) * (df * (one - phi1) + pow - one);
    checked_sqrt(radicand, d)
}

/// Scaling table for a portfolio autocovariance function.
pub fn scaling_report<T: Real>(acf: &AcfSequence<T>, horizons: &[usize]) -> Result<ScalingReport<T>> {
    let sigma_1 = acf.variance().sqrt();
    let rows = horizons
        .iter()
        .map(|&d| {
            let delta = delta_d(acf, d)?;
            Ok(ScalingRow::from_delta(sigma_1, d, delta))
        })
        .collect::<Result<_>>()?;
    Ok(ScalingReport { sigma_1, rows })
}
