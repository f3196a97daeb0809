//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::{Error, Real, Result};

/// Tolerance used for symmetry tests on unit-scale inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Relative eigenvalue floor below which a matrix is not PSD.
pub const PSD_TOL: f64 = 1e-10;
/// Spectral radius at or above which a process counts as non-stationary.
pub const STABILITY_THRESHOLD: f64 = 1.0 - 1e-12;

pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Symmetry with absolute tolerance on unit-scale matrices, relative to the
/// Frobenius norm otherwise.
pub fn is_symmetric<T: Real>(m: &DMatrix<T>) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.norm().max(T::one());
    let tol = T::lit(SYMMETRY_TOL) * scale;
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn symmetric_eigenvalues<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Smallest eigenvalue of the symmetric part and whether it clears the PSD floor
/// `-1e-10 * largest eigenvalue`.
pub fn psd_check<T: Real>(m: &DMatrix<T>) -> (T, bool) {
    if m.nrows() == 0 {
        return (T::zero(), true);
    }
    let ev = symmetric_eigenvalues(m);
    let min = ev[0];
    let max = ev[ev.len() - 1];
    let floor = -T::lit(PSD_TOL) * max.abs();
    (min, min >= floor)
}

pub fn require_psd<T: Real>(m: &DMatrix<T>) -> Result<()> {
    let (min, ok) = psd_check(m);
    if ok {
        Ok(())
    } else {
        Err(Error::NotPositiveSemidefinite { min_eigenvalue: min.to_f64_lossy() })
    }
}

pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| (z.re * z.re + z.im * z.im).sqrt())
        .fold(T::zero(), |a, b| a.max(b))
}

/// Companion matrix of a VAR(p) with coefficient blocks `phi[0..p]`.
pub fn companion<T: Real>(phi: &[DMatrix<T>], n: usize) -> DMatrix<T> {
    let p = phi.len();
    let mut c = DMatrix::zeros(n * p, n * p);
    for (k, block) in phi.iter().enumerate() {
        c.view_mut((0, k * n), (n, n)).copy_from(block);
    }
    for k in 1..p {
        c.view_mut((k * n, (k - 1) * n), (n, n)).fill_with_identity();
    }
    c
}

pub fn is_stable<T: Real>(phi: &[DMatrix<T>], n: usize) -> (T, bool) {
    if phi.is_empty() {
        return (T::zero(), true);
    }
    let rho = spectral_radius(&companion(phi, n));
    (rho, rho < T::lit(STABILITY_THRESHOLD))
}

/// Solves `X = A X Aᵀ + Q` through the vectorised system `(I - A⊗A) vec X = vec Q`.
pub fn solve_discrete_lyapunov<T: Real>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let kron = a.kronecker(a);
    let lhs = DMatrix::<T>::identity(n * n, n * n) - kron;
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let sol = lhs.lu().solve(&rhs).ok_or(Error::Singular)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(symmetrize(&DMatrix::from_column_slice(n, n, sol.as_slice())))
}

/// Lower-triangular factor `F` with `F Fᵀ = m`. Falls back to a diagonally
/// pivoted Cholesky when `m` is PSD but singular.
pub fn psd_factor<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    pivoted_cholesky(m)
}

fn pivoted_cholesky<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = m.nrows();
    let mut a = symmetrize(m);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = DMatrix::<T>::zeros(n, n);
    let scale = (0..n).fold(T::zero(), |acc, i| acc.max(m[(i, i)].abs()));
    let tol = T::lit(1e-12) * scale;
    for k in 0..n {
        // pick the largest remaining diagonal entry
        let (piv, &dmax) = (k..n)
            .map(|i| (i, &a[(i, i)]))
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty range");
        if dmax < -tol * T::lit(1e2) {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: dmax.to_f64_lossy() });
        }
        if piv != k {
            a.swap_rows(k, piv);
            a.swap_columns(k, piv);
            l.swap_rows(k, piv);
            perm.swap(k, piv);
        }
        if dmax <= tol {
            // remaining Schur complement must vanish for a PSD input
            for i in k..n {
                for j in k..n {
                    if a[(i, j)].abs() > tol * T::lit(1e2) {
                        let min = symmetric_eigenvalues(m)[0];
                        return Err(Error::NotPositiveSemidefinite {
                            min_eigenvalue: min.to_f64_lossy(),
                        });
                    }
                }
            }
            break;
        }
        let d = a[(k, k)].sqrt();
        l[(k, k)] = d;
        for i in (k + 1)..n {
            l[(i, k)] = a[(i, k)] / d;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                a[(i, j)] -= l[(i, k)] * l[(j, k)];
            }
        }
    }
    // undo the permutation: rows of `l` belong to permuted indices
    let mut f = DMatrix::<T>::zeros(n, n);
    for (row, &orig) in perm.iter().enumerate() {
        f.row_mut(orig).copy_from(&l.row(row));
    }
    Ok(f)
}
