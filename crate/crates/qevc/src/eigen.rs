//! Dense self-adjoint eigensolver backend.
//!
//! All eigendecompositions route through faer, which delivers
//! LAPACK-grade residuals (~1e-14 at the dimensions used here); the
//! tolerance contracts on reconstruction and PSD checks rely on that.
//! Parallel features are disabled so results never depend on worker count.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenvalues (unsorted) and eigenvector columns of a Hermitian matrix.
pub(crate) fn hermitian_eigen(
    h: &DMatrix<Complex64>,
) -> Option<(DVector<f64>, DMatrix<Complex64>)> {
    let n = h.nrows();
    let fm = faer::Mat::<faer::c64>::from_fn(n, n, |r, c| {
        let z = h[(r, c)];
        faer::c64::new(z.re, z.im)
    });
    let evd = fm.self_adjoint_eigen(faer::Side::Lower).ok()?;
    let values = DVector::from_iterator(n, (0..n).map(|i| evd.S()[i].re));
    let vectors = DMatrix::from_fn(n, n, |r, c| {
        let z = evd.U()[(r, c)];
        Complex64::new(z.re, z.im)
    });
    Some((values, vectors))
}

/// Eigenvalues (unsorted) and eigenvector columns of a real symmetric matrix.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let fm = faer::Mat::<f64>::from_fn(n, n, |r, c| m[(r, c)]);
    let evd = fm.self_adjoint_eigen(faer::Side::Lower).ok()?;
    let values = DVector::from_iterator(n, (0..n).map(|i| evd.S()[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| evd.U()[(r, c)]);
    Some((values, vectors))
}

/// Smallest eigenvalue of a real symmetric matrix.
pub(crate) fn symmetric_min_eigenvalue(m: &DMatrix<f64>) -> Option<f64> {
    let (values, _) = symmetric_eigen(m)?;
    Some(values.iter().copied().fold(f64::INFINITY, f64::min))
}
