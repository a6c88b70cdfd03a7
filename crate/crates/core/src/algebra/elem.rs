use std::ops::{Add, Mul, Neg, Sub};

use super::linalg::{self, c};
use super::{Mat, C64};
use crate::{Error, Result};

/// An element of `B ⊗ M_n(C)` with `B = M_d(C)`.
///
/// Stored as an `(n·d) × (n·d)` matrix made of `n × n` outer blocks, each a
/// `d × d` inner block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgElem {
    d: usize,
    n: usize,
    m: Mat,
}

impl AlgElem {
    pub fn new(d: usize, n: usize, m: Mat) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::DimensionMismatch("d and n must be positive".into()));
        }
        if m.nrows() != n * d || m.ncols() != n * d {
            return Err(Error::DimensionMismatch(format!(
                "expected a {0}x{0} matrix for d={d}, n={n}, got {1}x{2}",
                n * d,
                m.nrows(),
                m.ncols()
            )));
        }
        if !linalg::is_finite(&m) {
            return Err(Error::Parse("non-finite entry in algebra element".into()));
        }
        Ok(Self { d, n, m })
    }

    /// Wraps a matrix whose shape is known to be consistent.
    pub(crate) fn from_parts(d: usize, n: usize, m: Mat) -> Self {
        debug_assert_eq!(m.nrows(), n * d);
        Self { d, n, m }
    }

    /// A level-1 element.
    pub fn base(b: Mat) -> Result<Self> {
        let d = b.nrows();
        Self::new(d, 1, b)
    }

    /// `z · 1` at level `n`.
    pub fn scalar(d: usize, n: usize, z: C64) -> Self {
        Self::from_parts(d, n, linalg::identity(n * d) * z)
    }

    /// `i y · 1` at level `n`.
    pub fn iy(d: usize, n: usize, y: f64) -> Self {
        Self::scalar(d, n, c(0.0, y))
    }

    pub fn zero(d: usize, n: usize) -> Self {
        Self::from_parts(d, n, linalg::zeros(n * d, n * d))
    }

    /// The amplification `I_n ⊗ x` of a `d × d` matrix.
    pub fn amplify(x: &Mat, n: usize) -> Self {
        let d = x.nrows();
        Self::from_parts(d, n, linalg::kron(&linalg::identity(n), x))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n * self.d
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    /// Inner `d × d` block at outer position `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> Mat {
        linalg::block(&self.m, i, j, self.d)
    }

    pub fn same_shape(&self, other: &AlgElem) -> Result<()> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "(d={}, n={}) vs (d={}, n={})",
                self.d, self.n, other.d, other.n
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl FnOnce(&Mat) -> Mat) -> Self {
        Self::from_parts(self.d, self.n, f(&self.m))
    }

    pub fn adjoint(&self) -> Self {
        self.map(|m| m.adjoint())
    }

    pub fn scale(&self, z: C64) -> Self {
        self.map(|m| m * z)
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self::from_parts(self.d, self.n, linalg::inverse(&self.m)?))
    }

    /// `(b - b*) / 2i`.
    pub fn imag_part(&self) -> Mat {
        linalg::imag_part(&self.m)
    }

    /// Smallest eigenvalue of the imaginary part.
    pub fn min_imag(&self) -> f64 {
        linalg::min_eigenvalue(&self.imag_part())
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.m)
    }

    /// Largest entry modulus; a cheap scale for tolerances.
    pub fn norm_max(&self) -> f64 {
        linalg::max_abs(&self.m)
    }

    pub fn fro_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Direct sum `self ⊕ other` at level `n + n'`.
    pub fn direct_sum(&self, other: &AlgElem) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch("direct sum of different base dimensions".into()));
        }
        Ok(Self::from_parts(self.d, self.n + other.n, linalg::direct_sum(&self.m, &other.m)))
    }

    /// Splits a level-`(n1+n2)` element into its diagonal corners.
    pub fn corners(&self, n1: usize) -> Result<(Self, Self)> {
        if n1 == 0 || n1 >= self.n {
            return Err(Error::DimensionMismatch("corner split out of range".into()));
        }
        let k = n1 * self.d;
        let rest = self.dim() - k;
        let a = self.m.view((0, 0), (k, k)).into_owned();
        let b = self.m.view((k, k), (rest, rest)).into_owned();
        Ok((Self::from_parts(self.d, n1, a), Self::from_parts(self.d, self.n - n1, b)))
    }

    /// `(S ⊗ 1_d) self (S ⊗ 1_d)^{-1}` for `S ∈ GL_n`.
    pub fn conjugate_by(&self, s: &Mat) -> Result<Self> {
        if s.nrows() != self.n || s.ncols() != self.n {
            return Err(Error::DimensionMismatch("conjugating matrix must be n x n".into()));
        }
        let big = linalg::kron(s, &linalg::identity(self.d));
        let inv = linalg::inverse(&big)?;
        Ok(self.map(|m| &big * m * inv))
    }
}

impl Add for &AlgElem {
    type Output = AlgElem;
    fn add(self, rhs: &AlgElem) -> AlgElem {
        assert_eq!((self.d, self.n), (rhs.d, rhs.n), "shape mismatch in add");
        AlgElem::from_parts(self.d, self.n, &self.m + &rhs.m)
    }
}

impl Sub for &AlgElem {
    type Output = AlgElem;
    fn sub(self, rhs: &AlgElem) -> AlgElem {
        assert_eq!((self.d, self.n), (rhs.d, rhs.n), "shape mismatch in sub");
        AlgElem::from_parts(self.d, self.n, &self.m - &rhs.m)
    }
}

impl Mul for &AlgElem {
    type Output = AlgElem;
    fn mul(self, rhs: &AlgElem) -> AlgElem {
        assert_eq!((self.d, self.n), (rhs.d, rhs.n), "shape mismatch in mul");
        AlgElem::from_parts(self.d, self.n, &self.m * &rhs.m)
    }
}

impl Neg for &AlgElem {
    type Output = AlgElem;
    fn neg(self) -> AlgElem {
        AlgElem::from_parts(self.d, self.n, -&self.m)
    }
}

/// True iff `(b - b*)/2i ⪰ eps`.
pub fn uhp_member(b: &AlgElem, eps: f64) -> bool {
    b.min_imag() >= eps
}
