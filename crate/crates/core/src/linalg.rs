//! Small dense helpers on top of nalgebra used across the crate.

use crate::{Error, Matrix, Result, Vector};

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn vec_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Largest absolute asymmetry `max |m_ij − m_ji|`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetric_part(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue of a symmetric matrix together with a unit eigenvector.
pub fn max_eig_sym(m: &Matrix) -> (f64, Vector) {
    let eig = symmetric_part(m).symmetric_eigen();
    let mut best = 0;
    for k in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[k] > eig.eigenvalues[best] {
            best = k;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

pub fn min_eig_sym(m: &Matrix) -> f64 {
    symmetric_part(m).symmetric_eigen().eigenvalues.min()
}

/// `(P^{1/2}, P^{-1/2})` for a symmetric positive-definite `P`.
pub fn spd_sqrt_pair(p: &Matrix) -> Result<(Matrix, Matrix)> {
    let eig = symmetric_part(p).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::arg("matrix is not positive definite"));
    }
    let q = &eig.eigenvectors;
    let sqrt = Vector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.sqrt()));
    let inv = sqrt.map(|s| 1.0 / s);
    let root = q * Matrix::from_diagonal(&sqrt) * q.transpose();
    let root_inv = q * Matrix::from_diagonal(&inv) * q.transpose();
    Ok((symmetric_part(&root), symmetric_part(&root_inv)))
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = m.transpose() * m;
    max_eig_sym(&gram).0.max(0.0).sqrt()
}

/// Largest real part over the eigenvalues of a square matrix.
pub fn spectral_abscissa(m: &Matrix) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    m.clone().try_inverse().ok_or_else(|| Error::arg("matrix is singular"))
}

pub fn require_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::arg("matrix is not square"));
    }
    Ok(m.nrows())
}
