//! Model-implied autocovariances and scaling for white noise, VMA(1), VAR(1)
//! and small-order VARMA models, plus moment-based fitting.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, STABILITY_THRESHOLD};
use crate::scaling::horizon_sum;
use crate::{CovSequence, Error, Real, Result, VarmaModel, Weights};

fn require_stationary<T: Real>(model: &VarmaModel<T>) -> Result<()> {
    let (rho, ok) = linalg::is_stable(model.phi(), model.dim());
    if !ok {
        return Err(Error::NonStationary { spectral_radius: rho.to_f64_lossy() });
    }
    Ok(())
}

fn require_stable_phi<T: Real>(phi1: &DMatrix<T>) -> Result<T> {
    if !phi1.is_square() {
        return Err(Error::InvalidArgument("coefficient matrix must be square".into()));
    }
    let rho = linalg::spectral_radius(phi1);
    if !(rho < T::lit(STABILITY_THRESHOLD)) {
        return Err(Error::NonStationary { spectral_radius: rho.to_f64_lossy() });
    }
    Ok(rho)
}

/// Cross-covariances `Γ_XZ(k) = Cov(X_t, Z_{t−k})` for `k = 0..=max_lag`.
pub fn varma_cross_cov<T: Real>(model: &VarmaModel<T>, max_lag: usize) -> Result<Vec<DMatrix<T>>> {
    require_stationary(model)?;
    let n = model.dim();
    let mut out: Vec<DMatrix<T>> = Vec::with_capacity(max_lag + 1);
    out.push(model.sigma().clone());
    for k in 1..=max_lag {
        let mut g = DMatrix::zeros(n, n);
        for (j, phi) in model.phi().iter().enumerate() {
            let lag = j + 1;
            if lag <= k {
                g += phi * &out[k - lag];
            }
        }
        if k <= model.ma_order() {
            g += &model.theta()[k - 1] * model.sigma();
        }
        out.push(g);
    }
    Ok(out)
}

/// Right-hand side `Σ_{j=k}^{q} Θ_j Γ_XZ(j−k)ᵀ` with `Θ_0 = I`.
fn ma_forcing<T: Real>(model: &VarmaModel<T>, cross: &[DMatrix<T>], k: usize) -> DMatrix<T> {
    let n = model.dim();
    let q = model.ma_order();
    let mut r = DMatrix::zeros(n, n);
    for j in k..=q {
        let cxz = cross[j - k].transpose();
        if j == 0 {
            r += cxz;
        } else {
            r += &model.theta()[j - 1] * cxz;
        }
    }
    r
}

/// Autocovariance matrices `Γ(0..=max_lag)` of a stationary VARMA model.
pub fn varma_acov<T: Real>(model: &VarmaModel<T>, max_lag: usize) -> Result<CovSequence<T>> {
    require_stationary(model)?;
    let n = model.dim();
    let p = model.ar_order();
    let q = model.ma_order();

    if p == 0 {
        let sigma = model.sigma();
        let theta = |j: usize| -> DMatrix<T> {
            if j == 0 {
                DMatrix::identity(n, n)
            } else {
                model.theta()[j - 1].clone()
            }
        };
        let gammas = (0..=max_lag)
            .map(|k| {
                let mut g = DMatrix::zeros(n, n);
                for j in k..=q {
                    g += theta(j) * sigma * theta(j - k).transpose();
                }
                g
            })
            .collect::<Vec<_>>();
        return CovSequence::new(symmetrize_first(gammas));
    }

    let cross = varma_cross_cov(model, q)?;
    let forcing: Vec<DMatrix<T>> = (0..=p.max(q)).map(|k| ma_forcing(model, &cross, k)).collect();

    // Unknowns Γ(0..=p), equations k = 0..=p:
    //   Γ(k) − Σ_j Φ_j Γ(k−j) = R(k),   Γ(−m) = Γ(m)ᵀ
    let nn = n * n;
    let size = (p + 1) * nn;
    let apply = |unknowns: &[DMatrix<T>]| -> Vec<DMatrix<T>> {
        (0..=p)
            .map(|k| {
                let mut lhs = unknowns[k].clone();
                for (j, phi) in model.phi().iter().enumerate() {
                    let m = k as isize - (j as isize + 1);
                    let g = if m >= 0 {
                        unknowns[m as usize].clone()
                    } else {
                        unknowns[m.unsigned_abs()].transpose()
                    };
                    lhs -= phi * g;
                }
                lhs
            })
            .collect()
    };
    let mut system = DMatrix::<T>::zeros(size, size);
    let mut basis = vec![DMatrix::<T>::zeros(n, n); p + 1];
    for col in 0..size {
        let (block, idx) = (col / nn, col % nn);
        basis[block].as_mut_slice()[idx] = T::one();
        let image = apply(&basis);
        for (b, m) in image.iter().enumerate() {
            system.view_mut((b * nn, col), (nn, 1)).copy_from_slice(m.as_slice());
        }
        basis[block].as_mut_slice()[idx] = T::zero();
    }
    let mut rhs = DVector::<T>::zeros(size);
    for k in 0..=p {
        rhs.rows_mut(k * nn, nn).copy_from_slice(forcing[k].as_slice());
    }
    let sol = system.lu().solve(&rhs).ok_or(Error::Singular)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    let mut gammas: Vec<DMatrix<T>> = (0..=p)
        .map(|k| DMatrix::from_column_slice(n, n, sol.rows(k * nn, nn).as_slice()))
        .collect();
    for k in (p + 1)..=max_lag {
        let mut g = if k <= q { forcing[k].clone() } else { DMatrix::zeros(n, n) };
        for (j, phi) in model.phi().iter().enumerate() {
            g += phi * &gammas[k - j - 1];
        }
        gammas.push(g);
    }
    gammas.truncate(max_lag + 1);
    CovSequence::new(symmetrize_first(gammas))
}

fn symmetrize_first<T: Real>(mut gammas: Vec<DMatrix<T>>) -> Vec<DMatrix<T>> {
    gammas[0] = linalg::symmetrize(&gammas[0]);
    gammas
}

/// Stationary covariance of a VAR(1), `Γ(0) = Φ Γ(0) Φᵀ + Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Var1Covariance<T: Real> {
    pub phi1: DMatrix<T>,
    pub gamma0: DMatrix<T>,
}

impl<T: Real> Var1Covariance<T> {
    /// `Γ(k) = Φ^k Γ(0)`.
    pub fn lag(&self, k: usize) -> DMatrix<T> {
        let mut g = self.gamma0.clone();
        for _ in 0..k {
            g = &self.phi1 * g;
        }
        g
    }

    pub fn sequence(&self, max_lag: usize) -> Result<CovSequence<T>> {
        var1_sequence(&self.phi1, &self.gamma0, max_lag)
    }
}

pub fn var1_stationary_cov<T: Real>(phi1: &DMatrix<T>, sigma: &DMatrix<T>) -> Result<Var1Covariance<T>> {
    require_stable_phi(phi1)?;
    if sigma.shape() != phi1.shape() {
        return Err(Error::DimensionMismatch { expected: phi1.nrows(), got: sigma.nrows() });
    }
    linalg::require_psd(sigma)?;
    let gamma0 = linalg::solve_discrete_lyapunov(phi1, sigma)?;
    Ok(Var1Covariance { phi1: phi1.clone(), gamma0 })
}

/// `Γ(0..=max_lag)` of a VAR(1) from its coefficient and stationary covariance.
pub fn var1_sequence<T: Real>(phi1: &DMatrix<T>, gamma0: &DMatrix<T>, max_lag: usize) -> Result<CovSequence<T>> {
    let mut gammas = Vec::with_capacity(max_lag + 1);
    gammas.push(gamma0.clone());
    for k in 1..=max_lag {
        let next = phi1 * &gammas[k - 1];
        gammas.push(next);
    }
    CovSequence::new(gammas)
}

fn quad<T: Real>(w: &DVector<T>, m: &DMatrix<T>) -> T {
    w.dot(&(m * w))
}

fn positive_variance<T: Real>(v: T) -> Result<T> {
    if v > T::zero() {
        Ok(v)
    } else {
        Err(Error::ZeroVariance)
    }
}

fn check_square<T: Real>(m: &DMatrix<T>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

/// `δ(d)` of a VMA(1) portfolio:
/// `√(d + 2(d−1)·λᵀΘΣλ / λᵀ(ΘΣΘᵀ+Σ)λ)`.
pub fn vma1_delta_d<T: Real>(theta1: &DMatrix<T>, sigma: &DMatrix<T>, w: &Weights<T>, d: usize) -> Result<T> {
    let n = w.len();
    check_square(theta1, n)?;
    check_square(sigma, n)?;
    if d == 0 {
        return Err(Error::InvalidArgument("holding period must be at least 1".into()));
    }
    let lambda = w.as_vector();
    let g1 = theta1 * sigma;
    let g0 = &g1 * theta1.transpose() + sigma;
    let var = positive_variance(quad(lambda, &g0))?;
    let rho1 = quad(lambda, &g1) / var;
    let df = T::count(d);
    let radicand = df + T::lit(2.0) * (df - T::one()) * rho1;
    if radicand < T::zero() {
        return Err(Error::NegativeRadicand { d, value: radicand.to_f64_lossy() });
    }
    Ok(radicand.sqrt())
}

/// Contribution scaling `δ(i,d)` of a VMA(1).
pub fn vma1_delta_i_d<T: Real>(
    theta1: &DMatrix<T>,
    sigma: &DMatrix<T>,
    w: &Weights<T>,
    d: usize,
) -> Result<Vec<Option<T>>> {
    let delta = vma1_delta_d(theta1, sigma, w, d)?;
    let lambda = w.as_vector();
    let g1 = theta1 * sigma;
    let g0 = &g1 * theta1.transpose() + sigma;
    let num = &g1 * lambda;
    let den = &g0 * lambda;
    let df = T::count(d);
    Ok(per_asset(&den, |i| {
        (df + T::lit(2.0) * (df - T::one()) * num[i] / den[i]) / delta
    }))
}

fn per_asset<T: Real>(den: &DVector<T>, f: impl Fn(usize) -> T) -> Vec<Option<T>> {
    let scale = den.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let floor = T::lit(1e-13) * scale;
    (0..den.len()).map(|i| if den[i].abs() <= floor { None } else { Some(f(i)) }).collect()
}

/// Horizon sums of `v_k = Φ^k Γ(0) λ` for k < d.
fn var1_lagged<T: Real>(phi1: &DMatrix<T>, gamma0: &DMatrix<T>, lambda: &DVector<T>, d: usize) -> Vec<DVector<T>> {
    let mut v = Vec::with_capacity(d.max(1));
    v.push(gamma0 * lambda);
    for k in 1..d {
        let next = phi1 * &v[k - 1];
        v.push(next);
    }
    v
}

/// `δ(d)` of a VAR(1) portfolio given `Γ(0)`:
/// `√(d + 2Σ_{k=1}^{d−1}(d−k)·λᵀΦ^kΓ(0)λ / λᵀΓ(0)λ)`.
pub fn var1_delta_d<T: Real>(phi1: &DMatrix<T>, gamma0: &DMatrix<T>, w: &Weights<T>, d: usize) -> Result<T> {
    let n = w.len();
    check_square(phi1, n)?;
    check_square(gamma0, n)?;
    require_stable_phi(phi1)?;
    if d == 0 {
        return Err(Error::InvalidArgument("holding period must be at least 1".into()));
    }
    let lambda = w.as_vector();
    let v = var1_lagged(phi1, gamma0, lambda, d);
    let var = positive_variance(lambda.dot(&v[0]))?;
    let radicand = horizon_sum(d, d - 1, |k| lambda.dot(&v[k]) / var);
    if radicand < T::zero() {
        return Err(Error::NegativeRadicand { d, value: radicand.to_f64_lossy() });
    }
    Ok(radicand.sqrt())
}

/// As [`var1_delta_d`] with `Γ(0)` solved from the innovation covariance.
pub fn var1_delta_d_from_sigma<T: Real>(phi1: &DMatrix<T>, sigma: &DMatrix<T>, w: &Weights<T>, d: usize) -> Result<T> {
    let cov = var1_stationary_cov(phi1, sigma)?;
    var1_delta_d(phi1, &cov.gamma0, w, d)
}

/// Contribution scaling `δ(i,d)` of a VAR(1).
pub fn var1_delta_i_d<T: Real>(
    phi1: &DMatrix<T>,
    gamma0: &DMatrix<T>,
    w: &Weights<T>,
    d: usize,
) -> Result<Vec<Option<T>>> {
    let delta = var1_delta_d(phi1, gamma0, w, d)?;
    let lambda = w.as_vector();
    let v = var1_lagged(phi1, gamma0, lambda, d);
    Ok(per_asset(&v[0], |i| horizon_sum(d, d - 1, |k| v[k][i] / v[0][i]) / delta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phi1Fit<T: Real> {
    pub phi1: DMatrix<T>,
    pub spectral_radius: T,
    pub stable: bool,
}

/// `Φ_1 = Γ(1) Γ(0)⁻¹`; instability is flagged, not rejected.
pub fn fit_phi1_from_moments<T: Real>(gamma0: &DMatrix<T>, gamma1: &DMatrix<T>) -> Result<Phi1Fit<T>> {
    check_square(gamma0, gamma0.nrows())?;
    check_square(gamma1, gamma0.nrows())?;
    let inv = gamma0.clone().try_inverse().ok_or(Error::Singular)?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    let phi1 = gamma1 * inv;
    let spectral_radius = linalg::spectral_radius(&phi1);
    let stable = spectral_radius < T::lit(STABILITY_THRESHOLD);
    if !stable {
        log::warn!("fitted VAR(1) coefficient has spectral radius {spectral_radius}");
    }
    Ok(Phi1Fit { phi1, spectral_radius, stable })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ma1Fit<T: Real> {
    pub theta1: T,
    /// `|θ| = 1`: the fit sits on the invertibility boundary.
    pub boundary: bool,
}

/// Invertible root of `θ/(1+θ²) = ρ(1)`.
pub fn fit_ma1_from_rho<T: Real>(rho1: T) -> Result<Ma1Fit<T>> {
    let half = T::lit(0.5);
    if !rho1.is_finite() || rho1.abs() > half {
        return Err(Error::Ma1OutOfRange { rho1: rho1.to_f64_lossy() });
    }
    let disc = (T::one() - T::lit(4.0) * rho1 * rho1).max(T::zero());
    let theta1 = T::lit(2.0) * rho1 / (T::one() + disc.sqrt());
    let boundary = disc.is_zero();
    if boundary {
        log::warn!("MA(1) fit at the invertibility boundary (rho(1) = {rho1})");
    }
    Ok(Ma1Fit { theta1, boundary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vma1Fit<T: Real> {
    pub theta1: DMatrix<T>,
    pub sigma: DMatrix<T>,
    pub iterations: usize,
}

pub const VMA1_MAX_ITER: usize = 500;
pub const VMA1_TOL: f64 = 1e-10;

/// Moment-matching VMA(1) fit from `Γ(0), Γ(1)`.
///
/// Iterates `Σ ← Γ(0) − Γ(1) Σ⁻¹ Γ(1)ᵀ` from `Σ = Γ(0)` and sets `Θ_1 = Γ(1)Σ⁻¹`.
/// Convergence is declared once the Frobenius change drops below
/// `1e-10·‖Γ(0)‖_F`.
pub fn fit_vma1_moments<T: Real>(gamma0: &DMatrix<T>, gamma1: &DMatrix<T>) -> Result<Vma1Fit<T>> {
    let n = gamma0.nrows();
    check_square(gamma0, n)?;
    check_square(gamma1, n)?;
    if gamma0.clone().cholesky().is_none() {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: linalg::symmetric_eigenvalues(gamma0)[0].to_f64_lossy(),
        });
    }
    let tol = T::lit(VMA1_TOL) * gamma0.norm();
    let g1t = gamma1.transpose();
    let mut sigma = linalg::symmetrize(gamma0);
    for it in 1..=VMA1_MAX_ITER {
        let chol = sigma.clone().cholesky().ok_or_else(|| {
            Error::NoVma1Solution(format!("iterate left the positive-definite cone at step {it}"))
        })?;
        let next = linalg::symmetrize(&(gamma0 - gamma1 * chol.solve(&g1t)));
        let change = (&next - &sigma).norm();
        sigma = next;
        if change < tol {
            let chol = sigma.clone().cholesky().ok_or_else(|| {
                Error::NoVma1Solution("limit is not positive definite".into())
            })?;
            // Θ = Γ(1) Σ⁻¹  ⇔  Σ Θᵀ = Γ(1)ᵀ
            let theta1 = chol.solve(&g1t).transpose();
            let radius = linalg::spectral_radius(&theta1);
            if radius > T::one() + T::lit(1e-8) {
                return Err(Error::NoVma1Solution(format!(
                    "moving-average coefficient is not invertible (spectral radius {radius})"
                )));
            }
            return Ok(Vma1Fit { theta1, sigma, iterations: it });
        }
    }
    Err(Error::NoVma1Solution(format!("no convergence within {VMA1_MAX_ITER} iterations")))
}

/// Scalars `φ_k` with `λᵀΦ_k = φ_k λᵀ` for every k, when they exist.
pub fn reduce_portfolio_var<T: Real>(phi: &[DMatrix<T>], w: &Weights<T>) -> Result<Option<Vec<T>>> {
    if w.is_zero() {
        return Err(Error::InvalidArgument("zero weight vector".into()));
    }
    let lambda = w.as_vector();
    let ll = lambda.dot(lambda);
    let lnorm = ll.sqrt();
    let tol = T::lit(1e-10);
    let mut out = Vec::with_capacity(phi.len());
    for m in phi {
        check_square(m, lambda.len())?;
        let v = m.transpose() * lambda;
        let vnorm = v.norm();
        if vnorm <= T::lit(1e-14) * m.norm().max(T::one()) * lnorm {
            out.push(T::zero());
            continue;
        }
        let cos = v.dot(lambda) / (vnorm * lnorm);
        if cos.abs() <= T::one() - tol {
            return Ok(None);
        }
        let scalar = v.dot(lambda) / ll;
        if (0..v.len()).any(|i| (v[i] - scalar * lambda[i]).abs() > tol * vnorm) {
            return Ok(None);
        }
        out.push(scalar);
    }
    Ok(Some(out))
}

/// `d`-period portfolio volatility of closing-time returns against the
/// contemporaneous versions built from the naïve and Newey-West estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContemporaneousComparison<T: Real> {
    pub d: usize,
    /// `√(d λᵀΓ(0)λ + 2(d−1) λᵀΓ(1)λ)`.
    pub sigma_closing: T,
    /// `√(d λᵀΓ(0)λ + 2d λᵀΓ(1)λ)`.
    pub sigma_naive: T,
    /// `√(d λᵀΓ(0)λ + d λᵀΓ(1)λ)`.
    pub sigma_newey_west: T,
    pub ratio_naive: T,
    pub ratio_newey_west: T,
}

pub fn contemporaneous_ratio<T: Real>(
    gamma0: &DMatrix<T>,
    gamma1: &DMatrix<T>,
    w: &Weights<T>,
    d: usize,
) -> Result<ContemporaneousComparison<T>> {
    let n = w.len();
    check_square(gamma0, n)?;
    check_square(gamma1, n)?;
    if d == 0 {
        return Err(Error::InvalidArgument("holding period must be at least 1".into()));
    }
    let lambda = w.as_vector();
    let a = quad(lambda, gamma0);
    let b = quad(lambda, gamma1);
    let df = T::count(d);
    let two = T::lit(2.0);
    let root = |v: T| -> Result<T> {
        if v > T::zero() {
            Ok(v.sqrt())
        } else {
            Err(Error::NegativeRadicand { d, value: v.to_f64_lossy() })
        }
    };
    let sigma_closing = root(df * a + two * (df - T::one()) * b)?;
    let sigma_naive = root(df * a + two * df * b)?;
    let sigma_newey_west = root(df * a + df * b)?;
    Ok(ContemporaneousComparison {
        d,
        sigma_closing,
        sigma_naive,
        sigma_newey_west,
        ratio_naive: sigma_closing / sigma_naive,
        ratio_newey_west: sigma_closing / sigma_newey_west,
    })
}
