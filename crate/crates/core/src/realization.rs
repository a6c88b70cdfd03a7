//! Finite-dimensional models `x = [[p, a*], [a, T]]` on `B·ξ ⊕ M°`.
//!
//! `M°` is modelled as `(m·d) × d` complex matrices with left action
//! `I_m ⊗ b`, so a realization is determined by the corner `p`, the column
//! `a(ξ)` (an `(m·d) × d` matrix) and the Hermitian `T` acting on `M°`.
//! Within the assembled `((1+m)·d)`-square operator the vector `ξ` is the
//! column block `[I_d; 0]`.

use crate::algebra::linalg::{self, c};
use crate::algebra::{AlgElem, CpMap, Mat};
use crate::{Error, Result};

/// Hermiticity tolerance for `p`, `T` and joint operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Atoms closer than this are merged by [`Realization::atomic_scalar`].
pub const ATOM_MERGE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    d: usize,
    m: usize,
    p: Mat,
    alpha: Mat,
    t: Mat,
}

fn check_hermitian(name: &str, m: &Mat) -> Result<Mat> {
    if !linalg::is_hermitian(m, HERMITIAN_TOL * (1.0 + linalg::max_abs(m))) {
        return Err(Error::NotHermitian(name.into()));
    }
    Ok(linalg::hermitian_part(m))
}

/// Row index of `(outer, leg, inner)` in a layout of `legs` blocks of size `d`.
#[inline]
fn idx(outer: usize, legs: usize, leg: usize, d: usize, inner: usize) -> usize {
    (outer * legs + leg) * d + inner
}

impl Realization {
    pub fn new(d: usize, p: Mat, alpha: Mat, t: Mat) -> Result<Self> {
        if d == 0 || p.nrows() != d || p.ncols() != d {
            return Err(Error::DimensionMismatch(format!("p must be {d}x{d}")));
        }
        if alpha.ncols() != d && alpha.nrows() != 0 {
            return Err(Error::DimensionMismatch(format!("alpha must have {d} columns")));
        }
        if alpha.nrows() % d != 0 {
            return Err(Error::DimensionMismatch("alpha rows must be a multiple of d".into()));
        }
        let m = alpha.nrows() / d;
        if t.nrows() != m * d || t.ncols() != m * d {
            return Err(Error::DimensionMismatch(format!(
                "T must be {0}x{0}, got {1}x{2}",
                m * d,
                t.nrows(),
                t.ncols()
            )));
        }
        if !linalg::is_finite(&p) || !linalg::is_finite(&alpha) || !linalg::is_finite(&t) {
            return Err(Error::Parse("non-finite realization entry".into()));
        }
        let p = check_hermitian("p", &p)?;
        let t = check_hermitian("T", &t)?;
        let alpha = if m == 0 { linalg::zeros(0, d) } else { alpha };
        Ok(Self { d, m, p, alpha, t })
    }

    /// The point mass `δ_p` (`m = 0`).
    pub fn point_mass(p: Mat) -> Result<Self> {
        let d = p.nrows();
        Self::new(d, p, linalg::zeros(0, d), linalg::zeros(0, 0))
    }

    /// The Bernoulli law with variance map `s`: `p = 0`, `T = 0`, and the
    /// `k`-th block of `a` equal to `K_k*` for a Kraus family of `s`.
    pub fn bernoulli(s: &CpMap) -> Result<Self> {
        s.require_cp()?;
        let kraus = s.kraus().ok_or(Error::NotCompletelyPositive { min_eig: s.min_choi_eigenvalue() })?;
        let d = s.d();
        let r = kraus.len();
        let mut alpha = linalg::zeros(r * d, d);
        for (k, kk) in kraus.iter().enumerate() {
            alpha.view_mut((k * d, 0), (d, d)).copy_from(&kk.adjoint());
        }
        Self::new(d, linalg::zeros(d, d), alpha, linalg::zeros(r * d, r * d))
    }

    /// Jacobi (Lanczos) realization of the scalar measure `Σ w_k δ_{t_k}`.
    pub fn atomic_scalar(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        let (atoms, weights) = merge_atoms(atoms, weights)?;
        let n = atoms.len();
        // Lanczos on diag(t) from q0 = sqrt(w), with full reorthogonalization.
        let mut q: Vec<Vec<f64>> = vec![weights.iter().map(|w| w.sqrt()).collect()];
        let mut a = Vec::with_capacity(n);
        let mut beta: Vec<f64> = Vec::with_capacity(n);
        for k in 0..n {
            let qk = &q[k];
            let mut v: Vec<f64> = qk.iter().zip(&atoms).map(|(x, t)| x * t).collect();
            let ak: f64 = v.iter().zip(qk).map(|(x, y)| x * y).sum();
            a.push(ak);
            if k + 1 == n {
                break;
            }
            for _ in 0..2 {
                for qj in &q {
                    let dot: f64 = v.iter().zip(qj).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(qj).for_each(|(x, y)| *x -= dot * y);
                }
            }
            let b = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if b <= 1e-14 {
                return Err(Error::DegenerateAtoms("Lanczos breakdown".into()));
            }
            beta.push(b);
            q.push(v.into_iter().map(|x| x / b).collect());
        }
        let m = n - 1;
        let p = Mat::from_element(1, 1, c(a[0], 0.0));
        let mut alpha = linalg::zeros(m, 1);
        let mut t = linalg::zeros(m, m);
        if m > 0 {
            alpha[(0, 0)] = c(beta[0], 0.0);
            for k in 0..m {
                t[(k, k)] = c(a[k + 1], 0.0);
                if k + 1 < m {
                    t[(k, k + 1)] = c(beta[k + 1], 0.0);
                    t[(k + 1, k)] = c(beta[k + 1], 0.0);
                }
            }
        }
        Self::new(1, p, alpha, t)
    }

    /// Splits a selfadjoint `((1+m)·d)`-square operator into `(p, a, T)`.
    pub fn from_operator(d: usize, x: &Mat) -> Result<Self> {
        if d == 0 || x.nrows() != x.ncols() || x.nrows() % d != 0 || x.nrows() < d {
            return Err(Error::DimensionMismatch("operator size must be (1+m)·d".into()));
        }
        let x = check_hermitian("x", x)?;
        let rest = x.nrows() - d;
        Self::new(
            d,
            x.view((0, 0), (d, d)).into_owned(),
            x.view((d, 0), (rest, d)).into_owned(),
            x.view((d, d), (rest, rest)).into_owned(),
        )
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> &Mat {
        &self.p
    }

    pub fn alpha(&self) -> &Mat {
        &self.alpha
    }

    pub fn t(&self) -> &Mat {
        &self.t
    }

    /// The assembled operator `x` on `B·ξ ⊕ M°`.
    pub fn operator(&self) -> Mat {
        let d = self.d;
        let n = (1 + self.m) * d;
        let mut x = linalg::zeros(n, n);
        x.view_mut((0, 0), (d, d)).copy_from(&self.p);
        if self.m > 0 {
            let md = self.m * d;
            x.view_mut((d, 0), (md, d)).copy_from(&self.alpha);
            x.view_mut((0, d), (d, md)).copy_from(&self.alpha.adjoint());
            x.view_mut((d, d), (md, md)).copy_from(&self.t);
        }
        x
    }

    /// Operator norm of `x`.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.operator())
    }

    /// `F_n(b) = b − p_n − A_n* (B_n − T_n)⁻¹ A_n`.
    pub fn f_eval(&self, b: &AlgElem) -> Result<AlgElem> {
        if b.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "realization over M_{} evaluated at an element over M_{}",
                self.d,
                b.d()
            )));
        }
        let min_im = b.min_imag();
        if !(min_im > 0.0) {
            return Err(Error::NotInHalfPlane { min_im, eps: 0.0 });
        }
        let (d, n, m) = (self.d, b.n(), self.m);
        let bm = b.matrix();
        let mut out = bm - linalg::kron(&linalg::identity(n), &self.p);
        if m == 0 {
            return Ok(AlgElem::from_parts(d, n, out));
        }
        let dim = n * m * d;
        // Rows (i, k, a): outer level index, M° leg, inner index.
        let mut lhs = linalg::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for a in 0..d {
                        for cc in 0..d {
                            lhs[(idx(i, m, k, d, a), idx(j, m, k, d, cc))] = bm[(i * d + a, j * d + cc)];
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for k in 0..m {
                for l in 0..m {
                    for a in 0..d {
                        for cc in 0..d {
                            lhs[(idx(i, m, k, d, a), idx(i, m, l, d, cc))] -= self.t[(k * d + a, l * d + cc)];
                        }
                    }
                }
            }
        }
        let mut a_n = linalg::zeros(dim, n * d);
        for i in 0..n {
            a_n.view_mut((i * m * d, i * d), (m * d, d)).copy_from(&self.alpha);
        }
        let x = linalg::solve(&lhs, &a_n)?;
        out -= a_n.adjoint() * x;
        Ok(AlgElem::from_parts(d, n, out))
    }

    /// `⟨ξ, b₀ x b₁ x ⋯ x b_k ξ⟩`; `bs` holds `b₀, …, b_k`.
    pub fn moment(&self, bs: &[Mat]) -> Result<Mat> {
        let x = self.operator();
        moment_with(self.d, self.m, bs, |_| &x)
    }

    /// `B^{[n]}(b₁, …, b_{n−1})`: the ξ-to-ξ paths that never return to ξ
    /// in between, i.e. `p` for `n = 1` and `a* b₁ T b₂ ⋯ T b_{n−1} a`.
    pub fn boolean_cumulant(&self, bs: &[Mat]) -> Result<Mat> {
        let d = self.d;
        for b in bs {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::DimensionMismatch("argument must be d×d".into()));
            }
        }
        if bs.is_empty() {
            return Ok(self.p.clone());
        }
        if self.m == 0 {
            return Ok(linalg::zeros(d, d));
        }
        let im = linalg::identity(self.m);
        let mut v = self.alpha.clone();
        for (k, b) in bs.iter().enumerate().rev() {
            v = linalg::kron(&im, b) * v;
            if k > 0 {
                v = &self.t * v;
            }
        }
        Ok(self.alpha.adjoint() * v)
    }

    /// `R ↦ R̃` realizing `μ^{⊎α}` from a Kraus family `{K_j}` of `α`.
    pub fn boolean_power(&self, alpha: &CpMap) -> Result<Self> {
        if alpha.d() != self.d {
            return Err(Error::DimensionMismatch("exponent and realization differ in d".into()));
        }
        alpha.require_cp()?;
        let kraus = alpha
            .kraus()
            .ok_or(Error::NotCompletelyPositive { min_eig: alpha.min_choi_eigenvalue() })?;
        let (d, m, r) = (self.d, self.m, kraus.len());
        let p = alpha.apply_base(&self.p);
        let mut a = linalg::zeros(m * r * d, d);
        let mut t = linalg::zeros(m * r * d, m * r * d);
        for k in 0..m {
            let ak = self.alpha.view((k * d, 0), (d, d)).into_owned();
            for (j, kj) in kraus.iter().enumerate() {
                a.view_mut(((k * r + j) * d, 0), (d, d)).copy_from(&(&ak * kj.adjoint()));
                for k2 in 0..m {
                    let tkk = self.t.view((k * d, k2 * d), (d, d)).into_owned();
                    t.view_mut(((k * r + j) * d, (k2 * r + j) * d), (d, d)).copy_from(&tkk);
                }
            }
        }
        Self::new(d, p, a, t)
    }
}

fn moment_with<'a>(d: usize, m: usize, bs: &[Mat], op: impl Fn(usize) -> &'a Mat) -> Result<Mat> {
    if bs.is_empty() {
        return Err(Error::DimensionMismatch("a moment word needs at least b₀".into()));
    }
    for b in bs {
        if b.nrows() != d || b.ncols() != d {
            return Err(Error::DimensionMismatch(format!("word entries must be {d}x{d}")));
        }
    }
    let lift = linalg::identity(1 + m);
    let mut v = linalg::zeros((1 + m) * d, d);
    v.view_mut((0, 0), (d, d)).copy_from(&linalg::identity(d));
    for (pos, b) in bs.iter().enumerate().rev() {
        v = linalg::kron(&lift, b) * v;
        if pos > 0 {
            v = op(pos - 1) * v;
        }
    }
    Ok(v.view((0, 0), (d, d)).into_owned())
}

fn merge_atoms(atoms: &[f64], weights: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if atoms.is_empty() || atoms.len() != weights.len() {
        return Err(Error::WeightsInvalid("need one positive weight per atom".into()));
    }
    if atoms.iter().any(|t| !t.is_finite()) {
        return Err(Error::DegenerateAtoms("non-finite atom".into()));
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::WeightsInvalid("weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::WeightsInvalid(format!("weights sum to {total}")));
    }
    let mut pairs: Vec<(f64, f64)> = atoms.iter().cloned().zip(weights.iter().cloned()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (t, w) in pairs {
        match merged.last_mut() {
            Some(last) if (t - last.0).abs() < ATOM_MERGE_TOL => last.1 += w,
            _ => merged.push((t, w)),
        }
    }
    Ok(merged.into_iter().unzip())
}

/// Several selfadjoint operators on one module `B·ξ ⊕ M°`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointRealization {
    d: usize,
    m: usize,
    ops: Vec<Mat>,
}

impl JointRealization {
    pub fn new(d: usize, m: usize, ops: Vec<Mat>) -> Result<Self> {
        if d == 0 || ops.is_empty() {
            return Err(Error::DimensionMismatch("need d ≥ 1 and at least one operator".into()));
        }
        let n = (1 + m) * d;
        let ops = ops
            .iter()
            .map(|x| {
                if x.nrows() != n || x.ncols() != n {
                    return Err(Error::DimensionMismatch(format!("operators must be {n}x{n}")));
                }
                check_hermitian("joint operator", x)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, m, ops })
    }

    /// Places the given realizations on the direct sum of their `M°` parts,
    /// so each one acts on its own summand.
    pub fn direct(parts: &[Realization]) -> Result<Self> {
        let d = parts.first().ok_or(Error::DimensionMismatch("empty list".into()))?.d;
        if parts.iter().any(|r| r.d != d) {
            return Err(Error::DimensionMismatch("realizations differ in d".into()));
        }
        let m: usize = parts.iter().map(|r| r.m).sum();
        let n = (1 + m) * d;
        let mut offset = d;
        let mut ops = Vec::with_capacity(parts.len());
        for r in parts {
            let md = r.m * d;
            let mut x = linalg::zeros(n, n);
            x.view_mut((0, 0), (d, d)).copy_from(&r.p);
            if md > 0 {
                x.view_mut((offset, 0), (md, d)).copy_from(&r.alpha);
                x.view_mut((0, offset), (d, md)).copy_from(&r.alpha.adjoint());
                x.view_mut((offset, offset), (md, md)).copy_from(&r.t);
            }
            offset += md;
            ops.push(x);
        }
        Self::new(d, m, ops)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Mat] {
        &self.ops
    }

    /// The `l`-th operator as a stand-alone realization.
    pub fn component(&self, l: usize) -> Result<Realization> {
        let x = self.ops.get(l).ok_or(Error::DimensionMismatch(format!("no operator {l}")))?;
        Realization::from_operator(self.d, x)
    }

    /// `⟨ξ, b₀ x_{i₁} b₁ ⋯ x_{i_k} b_k ξ⟩` with `which = [i₁, …, i_k]`.
    pub fn moment(&self, bs: &[Mat], which: &[usize]) -> Result<Mat> {
        if bs.len() != which.len() + 1 {
            return Err(Error::DimensionMismatch("need one operator index per x".into()));
        }
        if let Some(&bad) = which.iter().find(|&&l| l >= self.ops.len()) {
            return Err(Error::DimensionMismatch(format!("no operator {bad}")));
        }
        moment_with(self.d, self.m, bs, |pos| &self.ops[which[pos]])
    }

    /// Realization of `X = Σ_l x_l ⊗ e(l, l)` over `M_d ⊗ M_k = M_{kd}`.
    ///
    /// The new `M°` rows are ordered `(j, l, c)`: module leg `j`, copy `l`,
    /// inner index `c`; the new inner index is `(l, c)`.
    pub fn diag_embed(&self) -> Result<Realization> {
        let (d, m, k) = (self.d, self.m, self.ops.len());
        let big = k * d;
        let comps = (0..k).map(|l| self.component(l)).collect::<Result<Vec<_>>>()?;
        let mut p = linalg::zeros(big, big);
        let mut alpha = linalg::zeros(m * big, big);
        let mut t = linalg::zeros(m * big, m * big);
        for (l, r) in comps.iter().enumerate() {
            p.view_mut((l * d, l * d), (d, d)).copy_from(&r.p);
            for j in 0..m {
                let row = (j * k + l) * d;
                alpha.view_mut((row, l * d), (d, d)).copy_from(&r.alpha.view((j * d, 0), (d, d)));
                for j2 in 0..m {
                    let col = (j2 * k + l) * d;
                    t.view_mut((row, col), (d, d)).copy_from(&r.t.view((j * d, j2 * d), (d, d)));
                }
            }
        }
        Realization::new(big, p, alpha, t)
    }
}
