//! Truncated amalgamated free product of bimodules, with word-pattern
//! projections `P_J`.
//!
//! The module is `B·ξ ⊕ ⨁_w M°_{w₁} ⊗_B ⋯ ⊗_B M°_{w_ℓ}` over alternating
//! words of length at most `L`. Tensor products over `B = M_d` collapse to
//! Kronecker products of multiplicities, so the block of word `w` has
//! `K_w = m_{w₁} ⋯ m_{w_ℓ}` legs of `d` rows each, with the leading leg
//! outermost. Words are enumerated by length, then lexicographically.
//! Letters are 1-based.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::algebra::linalg;
use crate::algebra::Mat;
use crate::realization::{JointRealization, Realization};
use crate::{Error, Result};

/// Default cap on the number of module rows.
pub const DEFAULT_MAX_ROWS: usize = 200_000;
/// Largest module for which dense operators are materialized.
pub const DENSE_MAX_ROWS: usize = 4096;

pub type Word = Vec<usize>;

/// A subset of alternating words over `{1, …, I}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JSpec {
    /// Every word.
    Free,
    /// `{∅, (i)}`; with `None` the index of the algebra it is assigned to.
    Boolean(Option<usize>),
    /// `{∅, (1)}`.
    MonotoneLow,
    /// `{∅, (1), (2), (2,1)}`.
    MonotoneHigh,
    /// `{∅, (1)}`.
    Ortho1,
    /// `{(1), (2,1)}`.
    Ortho2,
    /// `{∅} ∪ {w : last letter 1}`.
    SFree1,
    /// `{w : last letter 1}`.
    SFree2,
    /// Explicit words, plus every nonempty word ending in `suffix_last`.
    Custom { words: BTreeSet<Word>, suffix_last: Option<usize> },
}

impl JSpec {
    /// Membership for the spec assigned to algebra `i` (1-based).
    pub fn contains(&self, i: usize, w: &[usize]) -> bool {
        match self {
            JSpec::Free => true,
            JSpec::Boolean(k) => w.is_empty() || w == [k.unwrap_or(i)],
            JSpec::MonotoneLow | JSpec::Ortho1 => w.is_empty() || w == [1],
            JSpec::MonotoneHigh => matches!(w, [] | [1] | [2] | [2, 1]),
            JSpec::Ortho2 => matches!(w, [1] | [2, 1]),
            JSpec::SFree1 => w.last().is_none_or(|&l| l == 1),
            JSpec::SFree2 => w.last() == Some(&1),
            JSpec::Custom { words, suffix_last } => {
                words.contains(w) || matches!((suffix_last, w.last()), (Some(s), Some(l)) if s == l)
            }
        }
    }

    /// The builtin families realizing the named convolutions of two laws.
    pub fn family(name: &str) -> Result<Vec<JSpec>> {
        Ok(match name {
            "free" => vec![JSpec::Free, JSpec::Free],
            "boolean" => vec![JSpec::Boolean(Some(1)), JSpec::Boolean(Some(2))],
            "monotone" => vec![JSpec::MonotoneLow, JSpec::MonotoneHigh],
            "orthogonal" => vec![JSpec::Ortho1, JSpec::Ortho2],
            "sfree" => vec![JSpec::SFree1, JSpec::SFree2],
            other => return Err(Error::Parse(format!("unknown J-family {other:?}"))),
        })
    }
}

impl fmt::Display for JSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JSpec::Free => f.write_str("FREE"),
            JSpec::Boolean(None) => f.write_str("BOOLEAN"),
            JSpec::Boolean(Some(i)) => write!(f, "BOOLEAN_{i}"),
            JSpec::MonotoneLow => f.write_str("MONOTONE_LOW"),
            JSpec::MonotoneHigh => f.write_str("MONOTONE_HIGH"),
            JSpec::Ortho1 => f.write_str("ORTHO_1"),
            JSpec::Ortho2 => f.write_str("ORTHO_2"),
            JSpec::SFree1 => f.write_str("SFREE_1"),
            JSpec::SFree2 => f.write_str("SFREE_2"),
            JSpec::Custom { .. } => f.write_str("CUSTOM"),
        }
    }
}

impl FromStr for JSpec {
    type Err = Error;

    /// Builtin tags; `CUSTOM` needs the JSON form.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "FREE" => JSpec::Free,
            "BOOLEAN" => JSpec::Boolean(None),
            "MONOTONE_LOW" => JSpec::MonotoneLow,
            "MONOTONE_HIGH" => JSpec::MonotoneHigh,
            "ORTHO_1" => JSpec::Ortho1,
            "ORTHO_2" => JSpec::Ortho2,
            "SFREE_1" => JSpec::SFree1,
            "SFREE_2" => JSpec::SFree2,
            other => match other.strip_prefix("BOOLEAN_").map(str::parse::<usize>) {
                Some(Ok(i)) if i >= 1 => JSpec::Boolean(Some(i)),
                _ => return Err(Error::Parse(format!("unknown JSpec kind {other:?}"))),
            },
        })
    }
}

/// All alternating words over `{1, …, letters}` of length at most `max_len`,
/// ordered by length and then lexicographically.
pub fn alternating_words(letters: usize, max_len: usize) -> Vec<Word> {
    let mut out: Vec<Word> = vec![vec![]];
    let mut prev: Vec<Word> = vec![vec![]];
    for _ in 0..max_len {
        let mut cur = Vec::new();
        for a in 1..=letters {
            for w in &prev {
                if w.first() != Some(&a) {
                    let mut nw = Vec::with_capacity(w.len() + 1);
                    nw.push(a);
                    nw.extend_from_slice(w);
                    cur.push(nw);
                }
            }
        }
        out.extend(cur.iter().cloned());
        prev = cur;
    }
    out
}

/// Prepend-closure: for every `i` and every word `w` with `w₁ ≠ i` and
/// `|w| ≤ L − 1`, `w ∈ J_i` iff `(i, w) ∈ J_i`.
pub fn jspec_compatible(specs: &[JSpec], max_len: usize) -> bool {
    let letters = specs.len();
    if max_len == 0 {
        return true;
    }
    let words = alternating_words(letters, max_len - 1);
    specs.iter().enumerate().all(|(k, spec)| {
        let i = k + 1;
        words.iter().filter(|w| w.first() != Some(&i)).all(|w| {
            let mut iw = vec![i];
            iw.extend_from_slice(w);
            spec.contains(i, w) == spec.contains(i, &iw)
        })
    })
}

/// One operator of one algebra, split into its Fock-relevant pieces.
#[derive(Clone, Debug)]
struct Piece {
    p: Mat,
    /// Blocks `A_k` of `a(ξ)`.
    a: Vec<Mat>,
    t: Mat,
}

impl Piece {
    fn new(r: &Realization) -> Self {
        let d = r.d();
        let a = (0..r.m()).map(|k| r.alpha().view((k * d, 0), (d, d)).into_owned()).collect();
        Self { p: r.p().clone(), a, t: r.t().clone() }
    }
}

#[derive(Clone, Debug)]
pub struct FockSpace {
    d: usize,
    len: usize,
    mult: Vec<usize>,
    /// `pieces[i][l]`: operator `l` of algebra `i`.
    pieces: Vec<Vec<Piece>>,
    words: Vec<Word>,
    /// Row offset of each word block.
    offsets: Vec<usize>,
    legs: Vec<usize>,
    /// `prepend[i][w]`: index of `(i+1, w)` when it exists within length `L`.
    prepend: Vec<Vec<Option<usize>>>,
    index: HashMap<Word, usize>,
    rows: usize,
}

impl FockSpace {
    /// `build_fock` for single operators per algebra.
    pub fn build(parts: &[Realization], max_len: usize) -> Result<Self> {
        let joint = parts
            .iter()
            .map(|r| JointRealization::direct(std::slice::from_ref(r)))
            .collect::<Result<Vec<_>>>()?;
        Self::build_joint(&joint, max_len, DEFAULT_MAX_ROWS)
    }

    /// `build_fock` for tuples of operators per algebra and an explicit row cap.
    pub fn build_joint(parts: &[JointRealization], max_len: usize, max_rows: usize) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::PreconditionViolated("truncation length must be at least 1".into()));
        }
        let first = parts.first().ok_or(Error::DimensionMismatch("no algebras".into()))?;
        let d = first.d();
        if parts.iter().any(|p| p.d() != d) {
            return Err(Error::DimensionMismatch("algebras differ in d".into()));
        }
        let mult: Vec<usize> = parts.iter().map(|p| p.m()).collect();
        let letters = parts.len();
        let words = alternating_words(letters, max_len);
        let mut legs = Vec::with_capacity(words.len());
        let mut offsets = Vec::with_capacity(words.len());
        let mut rows: usize = 0;
        for w in &words {
            let k = w.iter().fold(1usize, |acc, &l| acc.saturating_mul(mult[l - 1]));
            offsets.push(rows);
            legs.push(k);
            rows = rows.saturating_add(k.saturating_mul(d));
            if rows > max_rows {
                return Err(Error::TruncationTooLarge { rows, cap: max_rows });
            }
        }
        let index: HashMap<Word, usize> = words.iter().cloned().enumerate().map(|(k, w)| (w, k)).collect();
        let prepend = (1..=letters)
            .map(|i| {
                words
                    .iter()
                    .map(|w| {
                        if w.first() == Some(&i) || w.len() >= max_len {
                            return None;
                        }
                        let mut iw = vec![i];
                        iw.extend_from_slice(w);
                        index.get(&iw).copied()
                    })
                    .collect()
            })
            .collect();
        let pieces = parts
            .iter()
            .map(|j| (0..j.k()).map(|l| j.component(l).map(|r| Piece::new(&r))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, len: max_len, mult, pieces, words, offsets, legs, prepend, index, rows })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_len(&self) -> usize {
        self.len
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn algebras(&self) -> usize {
        self.mult.len()
    }

    /// Row offset and leg count of a word block.
    pub fn block_of(&self, w: &[usize]) -> Option<(usize, usize)> {
        self.index.get(w).map(|&k| (self.offsets[k], self.legs[k]))
    }

    fn check_algebra(&self, i: usize, l: usize) -> Result<()> {
        if i == 0 || i > self.pieces.len() {
            return Err(Error::DimensionMismatch(format!("no algebra {i}")));
        }
        if l >= self.pieces[i - 1].len() {
            return Err(Error::DimensionMismatch(format!("algebra {i} has no operator {l}")));
        }
        Ok(())
    }

    /// `λ_i(x(i, l)) v` for `v` with `rows()` rows; `i` is 1-based.
    pub fn apply_lambda(&self, i: usize, l: usize, v: &Mat) -> Result<Mat> {
        self.check_algebra(i, l)?;
        if v.nrows() != self.rows {
            return Err(Error::DimensionMismatch(format!("vector must have {} rows", self.rows)));
        }
        let d = self.d;
        let piece = &self.pieces[i - 1][l];
        let m = self.mult[i - 1];
        let ncols = v.ncols();
        let mut out = linalg::zeros(self.rows, ncols);
        for (wi, w) in self.words.iter().enumerate() {
            let off = self.offsets[wi];
            let k_w = self.legs[wi];
            if k_w == 0 {
                continue;
            }
            if w.first() == Some(&i) {
                // T on the leading leg.
                let rest = k_w / m;
                let mut u = linalg::zeros(m * d, ncols);
                for leg in 0..rest {
                    for k in 0..m {
                        u.view_mut((k * d, 0), (d, ncols))
                            .copy_from(&v.view((off + (k * rest + leg) * d, 0), (d, ncols)));
                    }
                    let tu = &piece.t * &u;
                    for k in 0..m {
                        let mut dst = out.view_mut((off + (k * rest + leg) * d, 0), (d, ncols));
                        dst += tu.view((k * d, 0), (d, ncols));
                    }
                }
                continue;
            }
            for leg in 0..k_w {
                let src = v.view((off + leg * d, 0), (d, ncols));
                let mut dst = out.view_mut((off + leg * d, 0), (d, ncols));
                dst += &piece.p * src;
            }
            if let Some(ti) = self.prepend[i - 1][wi] {
                let toff = self.offsets[ti];
                for (k, ak) in piece.a.iter().enumerate() {
                    let ak_adj = ak.adjoint();
                    for leg in 0..k_w {
                        let row_w = off + leg * d;
                        let row_t = toff + (k * k_w + leg) * d;
                        let created = ak * v.view((row_w, 0), (d, ncols));
                        let annihilated = &ak_adj * v.view((row_t, 0), (d, ncols));
                        let mut dst = out.view_mut((row_t, 0), (d, ncols));
                        dst += created;
                        let mut dst = out.view_mut((row_w, 0), (d, ncols));
                        dst += annihilated;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Zeroes the rows of words outside `J_i`.
    pub fn project(&self, i: usize, spec: &JSpec, v: &mut Mat) {
        let d = self.d;
        for (wi, w) in self.words.iter().enumerate() {
            if !spec.contains(i, w) {
                let rows = self.legs[wi] * d;
                v.view_mut((self.offsets[wi], 0), (rows, v.ncols())).fill(linalg::c(0.0, 0.0));
            }
        }
    }

    fn check_specs(&self, specs: &[JSpec]) -> Result<()> {
        if specs.len() != self.algebras() {
            return Err(Error::DimensionMismatch(format!(
                "{} specs for {} algebras",
                specs.len(),
                self.algebras()
            )));
        }
        if !jspec_compatible(specs, self.len) {
            return Err(Error::IncompatibleSpec(
                specs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "),
            ));
        }
        Ok(())
    }

    /// `X_l v = Σ_i P_{J_i} λ_i(x(i, l)) v`.
    pub fn apply_x(&self, specs: &[JSpec], l: usize, v: &Mat) -> Result<Mat> {
        let mut acc = linalg::zeros(self.rows, v.ncols());
        for (k, spec) in specs.iter().enumerate() {
            let mut part = self.apply_lambda(k + 1, l, v)?;
            self.project(k + 1, spec, &mut part);
            acc += part;
        }
        Ok(acc)
    }

    fn xi(&self) -> Mat {
        let mut v = linalg::zeros(self.rows, self.d);
        v.view_mut((0, 0), (self.d, self.d)).copy_from(&linalg::identity(self.d));
        v
    }

    fn left_mul(&self, b: &Mat, v: &Mat) -> Mat {
        let d = self.d;
        let mut out = linalg::zeros(v.nrows(), v.ncols());
        for blk in 0..self.rows / d {
            out.view_mut((blk * d, 0), (d, v.ncols()))
                .copy_from(&(b * v.view((blk * d, 0), (d, v.ncols()))));
        }
        out
    }

    /// `⟨ξ, b₀ X_{l₁} b₁ ⋯ X_{l_k} b_k ξ⟩`; `which` lists the `l`'s and
    /// defaults to operator 0 everywhere when empty.
    pub fn j_moment(&self, specs: &[JSpec], word: &[Mat], which: &[usize]) -> Result<Mat> {
        self.check_specs(specs)?;
        let d = self.d;
        if word.is_empty() {
            return Err(Error::DimensionMismatch("a moment word needs at least b₀".into()));
        }
        if word.iter().any(|b| b.nrows() != d || b.ncols() != d) {
            return Err(Error::DimensionMismatch(format!("word entries must be {d}x{d}")));
        }
        let k = word.len() - 1;
        if k > self.len {
            return Err(Error::DegreeExceedsTruncation { degree: k, length: self.len });
        }
        if !which.is_empty() && which.len() != k {
            return Err(Error::DimensionMismatch("need one operator index per X".into()));
        }
        let mut v = self.xi();
        for pos in (0..=k).rev() {
            v = self.left_mul(&word[pos], &v);
            if pos > 0 {
                let l = if which.is_empty() { 0 } else { which[pos - 1] };
                v = self.apply_x(specs, l, &v)?;
            }
        }
        Ok(v.view((0, 0), (d, d)).into_owned())
    }

    fn dense(&self, f: impl Fn(&Mat) -> Result<Mat>) -> Result<Mat> {
        if self.rows > DENSE_MAX_ROWS {
            return Err(Error::TooLarge { n: self.rows, max: DENSE_MAX_ROWS });
        }
        f(&linalg::identity(self.rows))
    }

    /// Dense `λ_i(x(i, l))`.
    pub fn lambda_dense(&self, i: usize, l: usize) -> Result<Mat> {
        self.dense(|id| self.apply_lambda(i, l, id))
    }

    /// Dense `P_{J_i} λ_i(x(i, 0))`.
    pub fn j_operator(&self, specs: &[JSpec], i: usize) -> Result<Mat> {
        self.check_specs(specs)?;
        let mut m = self.lambda_dense(i, 0)?;
        self.project(i, &specs[i - 1], &mut m);
        Ok(m)
    }

    /// `‖[P_{J_i}, λ_i(x_i)^power]‖` (spectral norm).
    pub fn commutator_norm(&self, i: usize, spec: &JSpec, power: u32) -> Result<f64> {
        let lam = self.lambda_dense(i, 0)?;
        let mut a = linalg::identity(self.rows);
        for _ in 0..power {
            a = &lam * a;
        }
        let mut pa = a.clone();
        self.project(i, spec, &mut pa);
        let mut ap_t = a.adjoint();
        self.project(i, spec, &mut ap_t);
        let comm = pa - ap_t.adjoint();
        Ok(linalg::spectral_norm(&comm))
    }

    /// The truncated `X_l` as a realization over `M_d`, with `ξ` the empty word.
    pub fn compressed(&self, specs: &[JSpec], l: usize) -> Result<Realization> {
        self.check_specs(specs)?;
        let x = self.dense(|id| self.apply_x(specs, l, id))?;
        Realization::from_operator(self.d, &x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::linalg::c;

    fn ber() -> Realization {
        Realization::atomic_scalar(&[-1.0, 1.0], &[0.5, 0.5]).unwrap()
    }

    fn one() -> Mat {
        Mat::from_element(1, 1, c(1.0, 0.0))
    }

    #[test]
    fn word_enumeration() {
        let w = alternating_words(2, 3);
        assert_eq!(w.len(), 1 + 2 + 2 + 2);
        assert_eq!(w[1], vec![1]);
        assert_eq!(w[3], vec![1, 2]);
        assert_eq!(w[5], vec![1, 2, 1]);
        assert_eq!(alternating_words(3, 2).len(), 1 + 3 + 6);
    }

    #[test]
    fn single_algebra_reproduces_realization() {
        let f = FockSpace::build(&[ber()], 1).unwrap();
        assert_eq!(f.rows(), 2);
        let lam = f.lambda_dense(1, 0).unwrap();
        assert!(linalg::max_abs(&(lam - ber().operator())) < 1e-15);
    }

    #[test]
    fn free_fourth_moment_of_two_bernoullis() {
        let f = FockSpace::build(&[ber(), ber()], 4).unwrap();
        let specs = JSpec::family("free").unwrap();
        let m4 = f.j_moment(&specs, &vec![one(); 5], &[]).unwrap();
        assert!((m4[(0, 0)] - c(6.0, 0.0)).norm() < 1e-12);
        let b = JSpec::family("boolean").unwrap();
        let m4 = f.j_moment(&b, &vec![one(); 5], &[]).unwrap();
        assert!((m4[(0, 0)] - c(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn degree_bound_is_enforced() {
        let f = FockSpace::build(&[ber(), ber()], 2).unwrap();
        let specs = JSpec::family("free").unwrap();
        assert!(matches!(
            f.j_moment(&specs, &vec![one(); 4], &[]),
            Err(Error::DegreeExceedsTruncation { degree: 3, length: 2 })
        ));
    }

    #[test]
    fn compatibility_examples() {
        for fam in ["free", "boolean", "monotone", "orthogonal", "sfree"] {
            assert!(jspec_compatible(&JSpec::family(fam).unwrap(), 6), "{fam}");
        }
        let only_empty = JSpec::Custom { words: [vec![]].into_iter().collect(), suffix_last: None };
        assert!(!jspec_compatible(&[only_empty, JSpec::Free], 3));
        let sfree1 = JSpec::Custom { words: [vec![]].into_iter().collect(), suffix_last: Some(1) };
        assert!(jspec_compatible(&[sfree1, JSpec::SFree2], 5));
    }

    #[test]
    fn projections_on_xi() {
        let f = FockSpace::build(&[ber(), ber()], 3).unwrap();
        let xi = f.xi();
        let boolean = JSpec::family("boolean").unwrap();
        let full = f.apply_lambda(1, 0, &xi).unwrap();
        let mut kept = full.clone();
        f.project(1, &boolean[0], &mut kept);
        assert!(linalg::max_abs(&(full - kept)) < 1e-15);

        let ortho = JSpec::family("orthogonal").unwrap();
        let mut v = f.apply_lambda(2, 0, &xi).unwrap();
        f.project(2, &ortho[1], &mut v);
        assert!(v[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn truncation_cap() {
        let r = crate::sampling::random_realization(2, 3, 1.0, 1);
        let joint = JointRealization::direct(&[r]).unwrap();
        let parts = vec![joint.clone(), joint];
        assert!(matches!(
            FockSpace::build_joint(&parts, 8, 1000),
            Err(Error::TruncationTooLarge { .. })
        ));
    }

    #[test]
    fn spec_names_round_trip() {
        for s in ["FREE", "BOOLEAN", "BOOLEAN_2", "MONOTONE_LOW", "MONOTONE_HIGH", "ORTHO_1", "ORTHO_2", "SFREE_1", "SFREE_2"] {
            assert_eq!(s.parse::<JSpec>().unwrap().to_string(), s);
        }
        assert!("BOOLEAN_0".parse::<JSpec>().is_err());
        assert!("CUSTOM".parse::<JSpec>().is_err());
    }
}
