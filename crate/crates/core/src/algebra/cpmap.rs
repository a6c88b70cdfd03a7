use super::linalg::{self, c};
use super::{AlgElem, Mat, C64};
use crate::{Error, Result};

/// Hermiticity tolerance for Choi matrices.
pub const CHOI_HERMITIAN_TOL: f64 = 1e-12;
/// Minimum Choi eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-10;
/// Largest condition number accepted by [`CpMap::invert`].
pub const MAX_INVERT_COND: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpFlag {
    VerifiedCp,
    VerifiedNotCp,
    Unverified,
}

/// Input representation for [`CpMap::build`].
#[derive(Clone, Debug)]
pub enum CpSpec {
    Kraus(Vec<Mat>),
    Choi(Mat),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Compose,
    Scale,
}

/// A linear map on `M_d(C)`.
///
/// The Choi matrix is `C = Σ_{ij} e(i,j) ⊗ α(e(i,j))`; Kraus operators follow
/// `α(b) = Σ_k K_k b K_k*`. The map is also kept as a `d² × d²`
/// superoperator on row-major vectorizations, which is what `apply` uses.
#[derive(Clone, Debug)]
pub struct CpMap {
    d: usize,
    kraus: Option<Vec<Mat>>,
    choi: Mat,
    superop: Mat,
    flag: CpFlag,
}

impl PartialEq for CpMap {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.choi == other.choi
    }
}

fn choi_to_superop(d: usize, choi: &Mat) -> Mat {
    // S[(a,b),(i,j)] = C[(i,a),(j,b)]
    Mat::from_fn(d * d, d * d, |r, col| {
        let (a, b) = (r / d, r % d);
        let (i, j) = (col / d, col % d);
        choi[(i * d + a, j * d + b)]
    })
}

fn superop_to_choi(d: usize, s: &Mat) -> Mat {
    Mat::from_fn(d * d, d * d, |r, col| {
        let (i, a) = (r / d, r % d);
        let (j, b) = (col / d, col % d);
        s[(a * d + b, i * d + j)]
    })
}

fn vectorize(b: &Mat) -> nalgebra::DVector<C64> {
    let d = b.nrows();
    nalgebra::DVector::from_fn(d * d, |k, _| b[(k / d, k % d)])
}

fn unvectorize(d: usize, v: &nalgebra::DVector<C64>) -> Mat {
    Mat::from_fn(d, d, |a, b| v[a * d + b])
}

impl CpMap {
    /// `cp_build`: populates both representations and the CP flag.
    pub fn build(d: usize, spec: CpSpec) -> Result<Self> {
        match spec {
            CpSpec::Kraus(k) => Self::from_kraus(d, k),
            CpSpec::Choi(ch) => Self::from_choi(d, ch),
        }
    }

    pub fn from_kraus(d: usize, kraus: Vec<Mat>) -> Result<Self> {
        if d == 0 {
            return Err(Error::DimensionMismatch("d must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::DimensionMismatch("empty Kraus list".into()));
        }
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {d}x{d}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let mut choi = linalg::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let eij = linalg::matrix_unit(d, i, j);
                let img = kraus.iter().fold(linalg::zeros(d, d), |acc, k| acc + k * &eij * k.adjoint());
                linalg::set_block(&mut choi, i, j, &img);
            }
        }
        let superop = choi_to_superop(d, &choi);
        Ok(Self { d, kraus: Some(kraus), choi, superop, flag: CpFlag::VerifiedCp })
    }

    pub fn from_choi(d: usize, choi: Mat) -> Result<Self> {
        if d == 0 || choi.nrows() != d * d || choi.ncols() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix must be {0}x{0}",
                d * d
            )));
        }
        if !linalg::is_hermitian(&choi, CHOI_HERMITIAN_TOL * (1.0 + linalg::max_abs(&choi))) {
            return Err(Error::NotHermitian("Choi matrix".into()));
        }
        let choi = linalg::hermitian_part(&choi);
        let superop = choi_to_superop(d, &choi);
        Ok(Self::from_choi_unchecked(d, choi, superop).verified())
    }

    fn from_choi_unchecked(d: usize, choi: Mat, superop: Mat) -> Self {
        Self { d, kraus: None, choi, superop, flag: CpFlag::Unverified }
    }

    fn from_superop(d: usize, superop: Mat) -> Self {
        let choi = superop_to_choi(d, &superop);
        Self::from_choi_unchecked(d, choi, superop)
    }

    /// Recomputes the CP flag from the Choi spectrum, extracting Kraus
    /// operators when the map is CP.
    pub fn verified(mut self) -> Self {
        let (vals, vecs) = linalg::hermitian_eigen(&self.choi);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min >= PSD_TOL {
            self.flag = CpFlag::VerifiedCp;
            if self.kraus.is_none() {
                let d = self.d;
                let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
                let kraus: Vec<Mat> = vals
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > 1e-14 * scale)
                    .map(|(k, &v)| {
                        let col = vecs.column(k);
                        let sv = v.sqrt();
                        Mat::from_fn(d, d, |a, i| col[i * d + a] * sv)
                    })
                    .collect();
                self.kraus = Some(if kraus.is_empty() { vec![linalg::zeros(d, d)] } else { kraus });
            }
        } else {
            self.flag = CpFlag::VerifiedNotCp;
            self.kraus = None;
        }
        self
    }

    pub fn identity(d: usize) -> Self {
        Self::from_kraus(d, vec![linalg::identity(d)]).expect("identity map")
    }

    /// `b ↦ t b`. Negative `t` is allowed and yields a non-CP map.
    pub fn scalar(d: usize, t: f64) -> Self {
        if t >= 0.0 {
            Self::from_kraus(d, vec![linalg::identity(d) * c(t.sqrt(), 0.0)]).expect("scalar map")
        } else {
            Self::identity(d).scaled_formal(t).verified()
        }
    }

    pub fn zero(d: usize) -> Self {
        Self::scalar(d, 0.0)
    }

    /// `b ↦ K b K*`.
    pub fn ad(k: Mat) -> Result<Self> {
        let d = k.nrows();
        Self::from_kraus(d, vec![k])
    }

    /// `b ↦ tr(b)/d · 1`, the trace-preserving conditional expectation onto scalars.
    pub fn trace_mix(d: usize) -> Self {
        let choi = linalg::identity(d * d) * c(1.0 / d as f64, 0.0);
        Self::from_choi(d, choi).expect("trace map")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn choi(&self) -> &Mat {
        &self.choi
    }

    pub fn kraus(&self) -> Option<&[Mat]> {
        self.kraus.as_deref()
    }

    pub fn superop(&self) -> &Mat {
        &self.superop
    }

    pub fn flag(&self) -> CpFlag {
        self.flag
    }

    pub fn is_cp(&self) -> bool {
        self.flag == CpFlag::VerifiedCp
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.choi)
    }

    /// Fails with `NotCompletelyPositive` unless the Choi matrix is PSD.
    pub fn require_cp(&self) -> Result<()> {
        let m = self.min_choi_eigenvalue();
        if m >= PSD_TOL {
            Ok(())
        } else {
            Err(Error::NotCompletelyPositive { min_eig: m })
        }
    }

    /// Action on a single `d × d` matrix.
    pub fn apply_base(&self, b: &Mat) -> Mat {
        unvectorize(self.d, &(&self.superop * vectorize(b)))
    }

    /// `cp_apply`: the amplification `α ⊗ I_n` acting blockwise.
    pub fn apply(&self, b: &AlgElem) -> Result<AlgElem> {
        if b.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "map on M_{} applied to an element over M_{}",
                self.d,
                b.d()
            )));
        }
        let d = self.d;
        let n = b.n();
        let mut out = linalg::zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                linalg::set_block(&mut out, i, j, &self.apply_base(&b.block(i, j)));
            }
        }
        Ok(AlgElem::from_parts(d, n, out))
    }

    fn same_d(&self, other: &CpMap) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(format!(
                "maps on M_{} and M_{}",
                self.d, other.d
            )));
        }
        Ok(())
    }

    /// `cp_invert`: the linear inverse. The result is left `Unverified`.
    pub fn invert(&self) -> Result<CpMap> {
        let s = &self.superop;
        let sv = s.clone().singular_values();
        let hi = sv.iter().cloned().fold(0.0, f64::max);
        let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !cond.is_finite() || cond > MAX_INVERT_COND {
            return Err(Error::SingularExponent { cond });
        }
        let inv = s.clone().try_inverse().ok_or(Error::SingularExponent { cond })?;
        Ok(CpMap::from_superop(self.d, inv))
    }

    /// `self + other`.
    pub fn add(&self, other: &CpMap) -> Result<CpMap> {
        self.same_d(other)?;
        Ok(CpMap::from_superop(self.d, &self.superop + &other.superop).verified())
    }

    /// `self − other`; formal difference used for exponents such as `α − 1`.
    pub fn sub(&self, other: &CpMap) -> Result<CpMap> {
        self.same_d(other)?;
        Ok(CpMap::from_superop(self.d, &self.superop - &other.superop).verified())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &CpMap) -> Result<CpMap> {
        self.same_d(other)?;
        Ok(CpMap::from_superop(self.d, &self.superop * &other.superop).verified())
    }

    /// `t · self` for `t ≥ 0`.
    pub fn scale(&self, t: f64) -> Result<CpMap> {
        if !(t >= 0.0) {
            return Err(Error::NegativeScale(t));
        }
        Ok(self.scaled_formal(t).verified())
    }

    fn scaled_formal(&self, t: f64) -> CpMap {
        CpMap::from_superop(self.d, &self.superop * c(t, 0.0))
    }

    /// `cp_combine`.
    pub fn combine(op: CombineOp, lhs: &CpMap, rhs: Either<'_>) -> Result<CpMap> {
        match (op, rhs) {
            (CombineOp::Add, Either::Map(r)) => lhs.add(r),
            (CombineOp::Compose, Either::Map(r)) => lhs.compose(r),
            (CombineOp::Scale, Either::Real(t)) => lhs.scale(t),
            _ => Err(Error::Parse("operand kind does not match combine op".into())),
        }
    }

    /// `1 + self`.
    pub fn one_plus(&self) -> CpMap {
        self.add(&CpMap::identity(self.d)).expect("same d")
    }

    /// Distance between the superoperators (max entry).
    pub fn distance(&self, other: &CpMap) -> f64 {
        linalg::max_abs(&(&self.superop - &other.superop))
    }

    /// Operator norm of the superoperator; bounds `‖α(b)‖_F / ‖b‖_F`.
    pub fn superop_norm(&self) -> f64 {
        linalg::spectral_norm(&self.superop)
    }
}

/// Right operand of [`CpMap::combine`].
#[derive(Clone, Copy, Debug)]
pub enum Either<'a> {
    Map(&'a CpMap),
    Real(f64),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::linalg::{from_real_diag, max_abs};

    fn diag_k() -> Mat {
        from_real_diag(&[1.0, 0.5])
    }

    #[test]
    fn identity_choi_is_d_times_max_entangled() {
        let id = CpMap::identity(2);
        let omega = nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            * c(1.0 / 2f64.sqrt(), 0.0);
        let proj = &omega * omega.adjoint() * c(2.0, 0.0);
        assert!(max_abs(&(id.choi() - proj)) < 1e-14);
        assert_eq!(id.flag(), CpFlag::VerifiedCp);
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let mut swap = linalg::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(i * 2 + j, j * 2 + i)] = c(1.0, 0.0);
            }
        }
        let t = CpMap::from_choi(2, swap).unwrap();
        assert_eq!(t.flag(), CpFlag::VerifiedNotCp);
        assert!((t.min_choi_eigenvalue() + 1.0).abs() < 1e-12);
        let b = Mat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(3.0, 0.0), c(4.0, 0.0)]);
        assert!(max_abs(&(t.apply_base(&b) - b.transpose())) < 1e-14);
    }

    #[test]
    fn single_kraus_is_cp() {
        let a = CpMap::ad(diag_k()).unwrap();
        assert_eq!(a.flag(), CpFlag::VerifiedCp);
    }

    #[test]
    fn apply_examples() {
        let b = AlgElem::iy(1, 1, 1.0);
        let t = CpMap::scalar(1, 3.0);
        assert!((t.apply(&b).unwrap().matrix()[(0, 0)] - c(0.0, 3.0)).norm() < 1e-14);
        let tr = CpMap::trace_mix(2);
        let b = AlgElem::base(from_real_diag(&[0.0, 0.0]) + from_real_diag(&[2.0, 4.0]) * c(0.0, 1.0)).unwrap();
        let out = tr.apply(&b).unwrap();
        assert!(max_abs(&(out.matrix() - linalg::identity(2) * c(0.0, 3.0))) < 1e-14);
        assert!(tr.apply(&AlgElem::iy(3, 1, 1.0)).is_err());
    }

    #[test]
    fn invert_examples() {
        let half = CpMap::scalar(1, 2.0).invert().unwrap();
        assert!((half.apply_base(&linalg::identity(1))[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
        assert_eq!(half.flag(), CpFlag::Unverified);

        let one_plus = CpMap::ad(diag_k()).unwrap().one_plus();
        let inv = one_plus.invert().unwrap();
        let k = [1.0, 0.5];
        for i in 0..2 {
            for j in 0..2 {
                let out = inv.apply_base(&linalg::matrix_unit(2, i, j));
                let expected = 1.0 / (1.0 + k[i] * k[j]);
                assert!((out[(i, j)] - c(expected, 0.0)).norm() < 1e-14);
            }
        }

        let u = from_real_diag(&[1.0, -1.0]);
        let singular = CpMap::ad(u).unwrap().one_plus();
        assert!(matches!(singular.invert(), Err(Error::SingularExponent { .. })));
    }

    #[test]
    fn combine_examples() {
        let id = CpMap::identity(2);
        let two = CpMap::combine(CombineOp::Add, &id, Either::Map(&id)).unwrap();
        assert!(two.distance(&CpMap::scalar(2, 2.0)) < 1e-14);
        let zero = CpMap::combine(CombineOp::Scale, &id, Either::Real(0.0)).unwrap();
        assert_eq!(zero.flag(), CpFlag::VerifiedCp);
        assert!(matches!(id.scale(-1.0), Err(Error::NegativeScale(_))));
        assert!(id.add(&CpMap::identity(3)).is_err());
    }

    #[test]
    fn composition_of_ad_maps() {
        let k1 = Mat::from_row_slice(2, 2, &[c(1.0, 0.2), c(0.3, 0.0), c(-0.1, 0.4), c(0.7, 0.0)]);
        let k2 = Mat::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, -0.3), c(0.2, 0.1), c(1.1, 0.0)]);
        let a1 = CpMap::ad(k1.clone()).unwrap();
        let a2 = CpMap::ad(k2.clone()).unwrap();
        let comp = a2.compose(&a1).unwrap();
        let direct = CpMap::ad(&k2 * &k1).unwrap();
        assert!(comp.distance(&direct) < 1e-12);
        assert!(comp.is_cp());
    }

    #[test]
    fn kraus_extracted_from_choi_reproduces_action() {
        let tr = CpMap::trace_mix(2);
        let kraus = tr.kraus().unwrap().to_vec();
        let rebuilt = CpMap::from_kraus(2, kraus).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = linalg::matrix_unit(2, i, j);
                assert!(max_abs(&(rebuilt.apply_base(&e) - tr.apply_base(&e))) < 1e-12);
            }
        }
    }
}
