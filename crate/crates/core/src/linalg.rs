//! Dense complex linear-algebra helpers shared by the optimizers.
//!
//! Everything here works on Hermitian matrices: log-determinants go through
//! Cholesky, spectral quantities through the Hermitian eigensolver.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Largest dimension for which `lambda_max` uses a full eigendecomposition.
pub const DENSE_EIGEN_LIMIT: usize = 512;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(M + Mᴴ) / 2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `‖M − Mᴴ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

fn check_square(m: &CMat, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Cholesky factor of the Hermitian part of `m`; rejects factors whose
/// diagonal is not real positive (the complex factorization does not flag
/// indefinite input on its own).
fn cholesky(m: &CMat) -> Result<Cholesky<Complex64, nalgebra::Dyn>> {
    let chol = Cholesky::new(hermitize(m)).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0) || !d.re.is_finite() || d.im.abs() > 1e-8 * d.re {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(chol)
}

/// Natural log-determinant of a Hermitian positive-definite matrix.
pub fn ln_det_hpd(m: &CMat) -> Result<f64> {
    check_square(m, "log-det argument")?;
    let chol = cholesky(m)?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// Base-2 log-determinant of a Hermitian positive-definite matrix.
pub fn log2_det_hpd(m: &CMat) -> Result<f64> {
    Ok(ln_det_hpd(m)? / std::f64::consts::LN_2)
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn hpd_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    check_square(a, "system matrix")?;
    let chol = cholesky(a)?;
    Ok(chol.solve(b))
}

pub fn hpd_inverse(a: &CMat) -> Result<CMat> {
    check_square(a, "inverse argument")?;
    let chol = cholesky(a)?;
    Ok(hermitize(&chol.inverse()))
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (DVector<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of the Hermitian part of `m`, ascending, without vectors.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut values: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    hermitian_eigenvalues(m)[0]
}

/// Hermitian PSD square root with eigenvalues below `1e-12 · λ_max` clamped
/// to zero.
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    check_square(a, "square-root argument")?;
    let asym = hermitian_asymmetry(a);
    if asym > 1e-8 {
        return Err(Error::NotHermitian(asym));
    }
    let n = a.nrows();
    if n == 0 || a.norm() == 0.0 {
        return Ok(CMat::zeros(n, n));
    }
    let (values, vectors) = hermitian_eigen(a);
    let top = values[n - 1].max(0.0);
    let floor = 1e-12 * top;
    let roots: Vec<f64> = values
        .iter()
        .map(|&v| if v < floor { 0.0 } else { v.sqrt() })
        .collect();
    let mut scaled = vectors.clone();
    for (j, r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*r);
    }
    Ok(hermitize(&(scaled * vectors.adjoint())))
}

/// Largest eigenvalue of a Hermitian matrix.
///
/// Dense eigensolver up to [`DENSE_EIGEN_LIMIT`]; above that, power iteration
/// with the estimate inflated by 1% so the bound never undershoots.
pub fn lambda_max(s: &CMat) -> f64 {
    let n = s.nrows();
    if n == 0 {
        return 0.0;
    }
    if n <= DENSE_EIGEN_LIMIT {
        return hermitian_eigenvalues(s)[n - 1];
    }
    power_iteration_lambda_max(s, 1e-10, 10_000) * 1.01
}

/// Power iteration for the dominant eigenvalue of a Hermitian PSD matrix.
pub fn power_iteration_lambda_max(s: &CMat, tol: f64, max_iter: usize) -> f64 {
    let n = s.nrows();
    // Deterministic, non-degenerate start vector.
    let mut v = CVec::from_fn(n, |i, _| Complex64::new(1.0, 0.1 * (i as f64 + 1.0).sqrt()));
    let norm = v.norm();
    v.unscale_mut(norm);
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = s * &v;
        let next = v.dotc(&w).re;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w.unscale(wn);
        if (next - estimate).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `‖QᴴQ − I‖_F`.
pub fn unitarity_error(q: &CMat) -> f64 {
    (q.adjoint() * q - identity(q.ncols())).norm()
}

/// Element-wise product of equally sized matrices.
pub fn hadamard(a: &CMat, b: &CMat) -> CMat {
    a.component_mul(b)
}

/// `diag(x)` for a real vector.
pub fn real_diag(x: &[f64]) -> CMat {
    let mut d = CMat::zeros(x.len(), x.len());
    for (i, &v) in x.iter().enumerate() {
        d[(i, i)] = c(v);
    }
    d
}

/// `M · diag(x)` without forming the diagonal matrix.
pub fn scale_columns(m: &CMat, x: &[f64]) -> CMat {
    let mut out = m.clone();
    for (j, &v) in x.iter().enumerate() {
        out.column_mut(j).scale_mut(v);
    }
    out
}

/// `diag(φ) · M`.
pub fn scale_rows_complex(m: &CMat, phi: &CVec) -> CMat {
    let mut out = m.clone();
    for (i, p) in phi.iter().enumerate() {
        out.row_mut(i).iter_mut().for_each(|x| *x *= p);
    }
    out
}

/// `M · diag(φ)`.
pub fn scale_columns_complex(m: &CMat, phi: &CVec) -> CMat {
    let mut out = m.clone();
    for (j, p) in phi.iter().enumerate() {
        out.column_mut(j).iter_mut().for_each(|x| *x *= p);
    }
    out
}
