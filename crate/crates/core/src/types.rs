//! Validated domain types shared by the estimators, models and reports.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{Error, Real, Result};

/// `T × n` panel of simple returns, one row per period.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelReturns<T: Real> {
    values: DMatrix<T>,
    labels: Vec<String>,
    period_length: String,
}

impl<T: Real> PanelReturns<T> {
    /// Checks `T >= 2`, `n >= 1`, finite entries and unique labels.
    pub fn new(values: DMatrix<T>, labels: Vec<String>) -> Result<Self> {
        validate_panel(values, labels)
    }

    pub fn with_period_length(mut self, period_length: impl Into<String>) -> Self {
        self.period_length = period_length.into();
        self
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn period_length(&self) -> &str {
        &self.period_length
    }

    /// Number of periods.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of assets.
    pub fn n_assets(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, i: usize) -> Vec<T> {
        self.values.column(i).iter().copied().collect()
    }

    /// Portfolio return series `λᵀ X_t`.
    pub fn portfolio_series(&self, w: &Weights<T>) -> Result<Vec<T>> {
        w.check_dim(self.n_assets())?;
        Ok((&self.values * w.as_vector()).iter().copied().collect())
    }
}

pub fn validate_panel<T: Real>(raw: DMatrix<T>, labels: Vec<String>) -> Result<PanelReturns<T>> {
    if raw.nrows() < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: raw.nrows() });
    }
    if raw.ncols() == 0 {
        return Err(Error::InvalidArgument("panel has no assets".into()));
    }
    if labels.len() != raw.ncols() {
        return Err(Error::DimensionMismatch { expected: raw.ncols(), got: labels.len() });
    }
    for row in 0..raw.nrows() {
        for col in 0..raw.ncols() {
            if !raw[(row, col)].is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    let mut seen = HashSet::new();
    for l in &labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(PanelReturns { values: raw, labels, period_length: "1 day".into() })
}

/// Portfolio weights `λ`. Shorting and leverage are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<T: Real>(DVector<T>);

impl<T: Real> Weights<T> {
    pub fn new(lambda: Vec<T>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if let Some(i) = lambda.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: 0, col: i });
        }
        Ok(Weights(DVector::from_vec(lambda)))
    }

    /// `n` equal weights of `1/n`.
    pub fn equal(n: usize) -> Result<Self> {
        let w = T::one() / T::count(n.max(1));
        Self::new(vec![w; n])
    }

    pub fn as_vector(&self) -> &DVector<T> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.len() });
        }
        Ok(())
    }
}

/// Scalar autocovariances `γ(0..=K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfSequence<T: Real> {
    gamma: Vec<T>,
}

impl<T: Real> AcfSequence<T> {
    /// Requires `γ(0) > 0` and `|γ(k)| <= γ(0)`.
    pub fn new(gamma: Vec<T>) -> Result<Self> {
        let Some(&g0) = gamma.first() else {
            return Err(Error::InvalidArgument("empty autocovariance sequence".into()));
        };
        if !g0.is_finite() || g0 <= T::zero() {
            return Err(Error::ZeroVariance);
        }
        let bound = g0 * (T::one() + T::lit(1e-12));
        for (k, g) in gamma.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::NonFinite { row: k, col: 0 });
            }
            if g.abs() > bound {
                return Err(Error::InvalidArgument(format!(
                    "|gamma({k})| exceeds gamma(0)"
                )));
            }
        }
        Ok(AcfSequence { gamma })
    }

    /// Builds the sequence with `γ(0) = 1` from autocorrelations `ρ(1..)`.
    pub fn from_rho(rho: &[T]) -> Result<Self> {
        let mut gamma = Vec::with_capacity(rho.len() + 1);
        gamma.push(T::one());
        gamma.extend_from_slice(rho);
        Self::new(gamma)
    }

    pub fn gamma(&self, k: usize) -> Option<T> {
        self.gamma.get(k).copied()
    }

    pub fn rho(&self, k: usize) -> Option<T> {
        self.gamma.get(k).map(|&g| g / self.gamma[0])
    }

    pub fn gammas(&self) -> &[T] {
        &self.gamma
    }

    pub fn max_lag(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn variance(&self) -> T {
        self.gamma[0]
    }
}

/// Lagged covariance matrices `Γ(0..=K)` with `Γ(k) = Cov(X_{t+k}, X_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovSequence<T: Real> {
    gammas: Vec<DMatrix<T>>,
}

impl<T: Real> CovSequence<T> {
    /// Requires matching square dimensions and a symmetric PSD `Γ(0)`.
    pub fn new(gammas: Vec<DMatrix<T>>) -> Result<Self> {
        let Some(g0) = gammas.first() else {
            return Err(Error::InvalidArgument("empty covariance sequence".into()));
        };
        let n = g0.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("zero-dimensional covariance".into()));
        }
        for g in &gammas {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: g.ncols().max(g.nrows()) });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("non-finite covariance entry".into()));
            }
        }
        if !linalg::is_symmetric(g0) {
            return Err(Error::NotSymmetric);
        }
        linalg::require_psd(g0)?;
        Ok(CovSequence { gammas })
    }

    pub fn dim(&self) -> usize {
        self.gammas[0].nrows()
    }

    pub fn max_lag(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn lag(&self, k: usize) -> Option<&DMatrix<T>> {
        self.gammas.get(k)
    }

    /// `Γ(k)` for any signed lag, with `Γ(-k) = Γ(k)ᵀ`.
    pub fn at(&self, k: isize) -> Option<DMatrix<T>> {
        let m = self.gammas.get(k.unsigned_abs())?;
        Some(if k < 0 { m.transpose() } else { m.clone() })
    }

    pub fn gammas(&self) -> &[DMatrix<T>] {
        &self.gammas
    }

    pub fn gamma0(&self) -> &DMatrix<T> {
        &self.gammas[0]
    }

    /// Multiplies every matrix by `c`.
    pub fn scaled(&self, c: T) -> Self {
        CovSequence { gammas: self.gammas.iter().map(|g| g * c).collect() }
    }

    pub fn truncated(&self, max_lag: usize) -> Self {
        CovSequence { gammas: self.gammas.iter().take(max_lag + 1).cloned().collect() }
    }
}

/// VARMA(p, q) coefficients `Φ_1..Φ_p`, `Θ_1..Θ_q` and innovation covariance `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarmaModel<T: Real> {
    phi: Vec<DMatrix<T>>,
    theta: Vec<DMatrix<T>>,
    sigma: DMatrix<T>,
}

impl<T: Real> VarmaModel<T> {
    pub fn new(phi: Vec<DMatrix<T>>, theta: Vec<DMatrix<T>>, sigma: DMatrix<T>) -> Result<Self> {
        let n = sigma.nrows();
        if n == 0 || sigma.ncols() != n {
            return Err(Error::InvalidArgument("innovation covariance must be square".into()));
        }
        for m in phi.iter().chain(theta.iter()) {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.nrows().max(m.ncols()) });
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
        }
        if !linalg::is_symmetric(&sigma) {
            return Err(Error::NotSymmetric);
        }
        let ev = linalg::symmetric_eigenvalues(&sigma);
        let floor = -T::lit(1e-10) * sigma.norm();
        if ev[0] < floor {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: ev[0].to_f64_lossy() });
        }
        Ok(VarmaModel { phi, theta, sigma })
    }

    pub fn white_noise(sigma: DMatrix<T>) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), sigma)
    }

    pub fn vma1(theta1: DMatrix<T>, sigma: DMatrix<T>) -> Result<Self> {
        Self::new(Vec::new(), vec![theta1], sigma)
    }

    pub fn var1(phi1: DMatrix<T>, sigma: DMatrix<T>) -> Result<Self> {
        Self::new(vec![phi1], Vec::new(), sigma)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn ar_order(&self) -> usize {
        self.phi.len()
    }

    pub fn ma_order(&self) -> usize {
        self.theta.len()
    }

    pub fn phi(&self) -> &[DMatrix<T>] {
        &self.phi
    }

    pub fn theta(&self) -> &[DMatrix<T>] {
        &self.theta
    }

    pub fn sigma(&self) -> &DMatrix<T> {
        &self.sigma
    }

    /// Spectral radius of the AR companion matrix (zero for pure MA models).
    pub fn spectral_radius(&self) -> T {
        linalg::is_stable(&self.phi, self.dim()).0
    }

    pub fn is_stationary(&self) -> bool {
        linalg::is_stable(&self.phi, self.dim()).1
    }

    /// Invertibility of a VMA(1) part: spectral radius of `Θ_1` below one.
    pub fn is_invertible(&self) -> bool {
        linalg::is_stable(&self.theta, self.dim()).1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow<T: Real> {
    pub d: usize,
    pub sigma_d: T,
    pub delta_d: T,
    pub sqrt_d: T,
    /// `δ(d) / √d`.
    pub ratio: T,
}

impl<T: Real> ScalingRow<T> {
    /// Row for horizon `d` given one-period volatility and `δ(d)`.
    pub fn from_delta(sigma_1: T, d: usize, delta: T) -> Self {
        let sqrt_d = T::count(d).sqrt();
        ScalingRow { d, sigma_d: sigma_1 * delta, delta_d: delta, sqrt_d, ratio: delta / sqrt_d }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport<T: Real> {
    pub sigma_1: T,
    pub rows: Vec<ScalingRow<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContributionRow<T: Real> {
    pub d: usize,
    pub sigma_d: T,
    /// `σ_i(λ, d)` in return units.
    pub contributions: Vec<T>,
    /// `σ_i(λ, d) / σ(λ, d)`.
    pub shares: Vec<T>,
    /// `δ(i, d)`; `None` where the asset is uncorrelated with the portfolio.
    pub deltas: Vec<Option<T>>,
    /// Square-root-of-time baseline `σ_i(λ)·√d`.
    pub sqrt_rule: Vec<T>,
}

impl<T: Real> ContributionRow<T> {
    /// Relative gap `|Σ_i σ_i(λ,d) − σ(λ,d)| / σ(λ,d)`.
    pub fn allocation_error(&self) -> T {
        let total = self.contributions.iter().fold(T::zero(), |a, &b| a + b);
        let gap = (total - self.sigma_d).abs();
        if self.sigma_d.is_zero() {
            gap
        } else {
            gap / self.sigma_d.abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContributionReport<T: Real> {
    pub labels: Vec<String>,
    pub rows: Vec<ContributionRow<T>>,
}

impl<T: Real> ContributionReport<T> {
    pub fn max_allocation_error(&self) -> T {
        self.rows.iter().map(|r| r.allocation_error()).fold(T::zero(), |a, b| a.max(b))
    }
}
