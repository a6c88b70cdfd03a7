//! Dense complex linear-algebra helpers shared by the whole crate.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Mat, C64};
use crate::{Error, Result};

/// Reciprocal-condition threshold below which an inversion is refused.
pub const RCOND_MIN: f64 = 1e-14;

/// Above this size, solves use the LU pivots as a condition estimate instead of
/// forming the inverse.
const EXACT_RCOND_MAX_DIM: usize = 400;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> Mat {
    Mat::zeros(r, c)
}

pub fn from_real_diag(diag: &[f64]) -> Mat {
    let n = diag.len();
    Mat::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { c(0.0, 0.0) })
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn norm1(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral (operator 2-) norm.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `(m + m*) / 2`.
pub fn hermitian_part(m: &Mat) -> Mat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// `(m - m*) / 2i`.
pub fn imag_part(m: &Mat) -> Mat {
    (m - m.adjoint()) * c(0.0, -0.5)
}

pub fn is_hermitian(m: &Mat, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    hermitian_eigenvalues(m).first().cloned().unwrap_or(f64::INFINITY)
}

/// Eigen-decomposition of the Hermitian part: (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
}

/// `|h| = (h²)^{1/2}` for Hermitian `h`.
pub fn hermitian_abs(h: &Mat) -> Mat {
    let (vals, vecs) = hermitian_eigen(h);
    let d = from_real_diag(&vals.iter().map(|v| v.abs()).collect::<Vec<_>>());
    &vecs * d * vecs.adjoint()
}

/// Inverse with a reciprocal 1-norm condition guard.
pub fn inverse(m: &Mat) -> Result<Mat> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    if !is_finite(m) {
        return Err(Error::IllConditioned { rcond: 0.0 });
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { rcond: 0.0 })?;
    let rcond = 1.0 / (norm1(m) * norm1(&inv));
    if !rcond.is_finite() || rcond < RCOND_MIN {
        return Err(Error::IllConditioned { rcond: if rcond.is_finite() { rcond } else { 0.0 } });
    }
    Ok(inv)
}

/// Solves `m x = rhs`.
pub fn solve(m: &Mat, rhs: &Mat) -> Result<Mat> {
    if m.nrows() <= EXACT_RCOND_MAX_DIM {
        return Ok(inverse(m)? * rhs);
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = u.diagonal().iter().map(|z| z.norm()).collect();
    let hi = diag.iter().cloned().fold(0.0, f64::max);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if !rcond.is_finite() || rcond < RCOND_MIN {
        return Err(Error::IllConditioned { rcond });
    }
    lu.solve(rhs).ok_or(Error::IllConditioned { rcond: 0.0 })
}

/// Block `(i, j)` of size `bs × bs`.
pub fn block(m: &Mat, i: usize, j: usize, bs: usize) -> Mat {
    m.view((i * bs, j * bs), (bs, bs)).into_owned()
}

pub fn set_block(m: &mut Mat, i: usize, j: usize, b: &Mat) {
    let (r, c) = b.shape();
    m.view_mut((i * r, j * c), (r, c)).copy_from(b);
}

/// Block-diagonal concatenation.
pub fn direct_sum(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Matrix unit `e(i, j)` of size `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> Mat {
    let mut m = zeros(n, n);
    m[(i, j)] = c(1.0, 0.0);
    m
}

/// Converts a real matrix.
pub fn from_real(m: &DMatrix<f64>) -> Mat {
    m.map(|x| c(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_refuses_singular() {
        let m = from_real_diag(&[1.0, 0.0]);
        assert!(matches!(inverse(&m), Err(Error::IllConditioned { .. })));
        let m = from_real_diag(&[1.0, 1e-17]);
        assert!(matches!(inverse(&m), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn imag_part_of_upper_triangular() {
        let mut b = zeros(2, 2);
        b[(0, 0)] = c(0.0, 2.0);
        b[(0, 1)] = c(1.0, 0.0);
        b[(1, 1)] = c(0.0, 2.0);
        let ev = hermitian_eigenvalues(&imag_part(&b));
        assert!((ev[0] - 1.5).abs() < 1e-14 && (ev[1] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn abs_squares_back() {
        let h = from_real(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0]));
        let a = hermitian_abs(&h);
        assert!(max_abs(&(&a * &a - &h * &h)) < 1e-12);
        assert!(min_eigenvalue(&a) > -1e-12);
    }
}
