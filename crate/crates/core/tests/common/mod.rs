//! Random model generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volscale::linalg::spectral_radius;
use volscale::scaling::ScalarArma;
use volscale::{VarmaModel, Weights};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

/// `A Aᵀ + 0.1 I` for a random `A`.
pub fn random_pd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = uniform_matrix(rng, n);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.1
}

/// Random matrix rescaled to a spectral radius in `(0, max_radius]`.
pub fn random_stable(rng: &mut impl Rng, n: usize, max_radius: f64) -> DMatrix<f64> {
    let a = uniform_matrix(rng, n);
    let r = spectral_radius(&a).max(1e-12);
    let target = rng.random_range(0.05..max_radius);
    a * (target / r)
}

/// Random matrix with Frobenius norm at most `max_norm`.
pub fn random_small(rng: &mut impl Rng, n: usize, max_norm: f64) -> DMatrix<f64> {
    let a = uniform_matrix(rng, n);
    let target = rng.random_range(0.0..max_norm);
    let norm = a.norm().max(1e-12);
    a * (target / norm)
}

pub fn random_weights(rng: &mut impl Rng, n: usize) -> Weights<f64> {
    Weights::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[derive(Debug, Clone)]
pub enum TestModel {
    WhiteNoise(VarmaModel<f64>),
    Ma(ScalarArma<f64>),
    Ar1(ScalarArma<f64>),
    Vma1(VarmaModel<f64>),
    Var1(VarmaModel<f64>),
}

impl TestModel {
    pub fn varma(&self) -> VarmaModel<f64> {
        match self {
            TestModel::WhiteNoise(m) | TestModel::Vma1(m) | TestModel::Var1(m) => m.clone(),
            TestModel::Ma(a) | TestModel::Ar1(a) => a.to_varma().unwrap(),
        }
    }

    pub fn dim(&self) -> usize {
        self.varma().dim()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TestModel::WhiteNoise(_) => "white-noise",
            TestModel::Ma(_) => "ma(q)",
            TestModel::Ar1(_) => "ar(1)",
            TestModel::Vma1(_) => "vma(1)",
            TestModel::Var1(_) => "var(1)",
        }
    }
}

/// 200 models: 40 each of white noise, MA(q≤3), AR(1), VMA(1), VAR(1), n ≤ 5.
pub fn model_zoo(seed: u64) -> Vec<(TestModel, Weights<f64>)> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(200);
    for i in 0..200 {
        let n = rng.random_range(1..=5usize);
        let model = match i % 5 {
            0 => TestModel::WhiteNoise(VarmaModel::white_noise(random_pd(&mut rng, n)).unwrap()),
            1 => {
                let q = rng.random_range(0..=3usize);
                let theta = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
                TestModel::Ma(ScalarArma::ma(theta, rng.random_range(0.1..2.0)).unwrap())
            }
            2 => {
                let phi = rng.random_range(-0.95..0.95);
                TestModel::Ar1(ScalarArma::new(vec![phi], vec![], rng.random_range(0.1..2.0)).unwrap())
            }
            3 => TestModel::Vma1(
                VarmaModel::vma1(random_small(&mut rng, n, 0.9), random_pd(&mut rng, n)).unwrap(),
            ),
            _ => TestModel::Var1(
                VarmaModel::var1(random_stable(&mut rng, n, 0.9), random_pd(&mut rng, n)).unwrap(),
            ),
        };
        let w = random_weights(&mut rng, model.dim());
        out.push((model, w));
    }
    out
}

/// Variance of `λᵀ(X_1 + … + X_d)` for a VMA(q) from its moving-average
/// coefficients: the sum equals `Σ_s C_s Z_s` with `C_s = Σ_{t} Θ_{t−s}`.
pub fn ma_sum_variance(theta: &[DMatrix<f64>], sigma: &DMatrix<f64>, lambda: &DVector<f64>, d: usize) -> f64 {
    let n = sigma.nrows();
    let q = theta.len();
    let coef = |j: usize| -> DMatrix<f64> {
        if j == 0 {
            DMatrix::identity(n, n)
        } else {
            theta[j - 1].clone()
        }
    };
    // innovations Z_s for s = 1−q ..= d, shifted by q
    let mut total = 0.0;
    for s_shift in 0..(d + q) {
        let s = s_shift as isize - q as isize + 1;
        let mut c = DMatrix::<f64>::zeros(n, n);
        for t in 1..=d as isize {
            let j = t - s;
            if (0..=q as isize).contains(&j) {
                c += coef(j as usize);
            }
        }
        let v = c.transpose() * lambda;
        total += v.dot(&(sigma * &v));
    }
    total
}

/// `Γ(0)` of a VAR(1) by summing `Σ_j Φ^j Σ Φ^jᵀ` until the terms vanish.
pub fn var1_gamma0_series(phi: &DMatrix<f64>, sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let mut total = sigma.clone();
    let mut pk = phi.clone();
    for _ in 0..10_000 {
        let term = &pk * sigma * pk.transpose();
        total += &term;
        if term.norm() < 1e-20 * total.norm() {
            break;
        }
        pk = phi * pk;
    }
    total
}

/// `Σ_{s=1}^{d} Σ_{t=1}^{d} g(s − t)` with `g(−k) = g(k)`: the sum of all entries
/// of the explicit `d × d` Toeplitz matrix.
pub fn toeplitz_total(g: &[f64], d: usize) -> f64 {
    let mut total = 0.0;
    for s in 0..d {
        for t in 0..d {
            total += g.get(s.abs_diff(t)).copied().unwrap_or(0.0);
        }
    }
    total
}

/// Asymptotic standard error of the entry `(i, j)` of `Γ̂(k)` (no demeaning)
/// for a Gaussian process with autocovariances `gamma` (zero beyond the list):
/// `Var ≈ (1/T) Σ_h [Γ(h)_ii Γ(h)_jj + Γ(k−h)_ij Γ(k+h)_ij]`.
pub fn acov_standard_error(gamma: &[DMatrix<f64>], k: usize, i: usize, j: usize, len: usize) -> f64 {
    let n = gamma[0].nrows();
    let g = |m: isize| -> DMatrix<f64> {
        let a = m.unsigned_abs();
        match gamma.get(a) {
            Some(x) if m >= 0 => x.clone(),
            Some(x) => x.transpose(),
            None => DMatrix::zeros(n, n),
        }
    };
    let reach = (gamma.len() + k + 1) as isize;
    let mut var = 0.0;
    for h in -reach..=reach {
        let k = k as isize;
        var += g(h)[(i, i)] * g(h)[(j, j)] + g(k - h)[(i, j)] * g(k + h)[(i, j)];
    }
    (var / len as f64).sqrt()
}
