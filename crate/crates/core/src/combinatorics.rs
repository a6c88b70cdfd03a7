//! Interval partitions and Boolean cumulants of `M_d`-valued variables.
//!
//! A multilinear map `B^{n-1} → B` is stored by its values on tuples of
//! matrix units, `d²` choices per slot, so every series here is exact up to
//! rounding. Order `n` counts the copies of `x`; the map of order `n` takes
//! `n − 1` arguments.

use rayon::prelude::*;

use crate::algebra::{linalg, CpMap, Mat};
use crate::realization::Realization;
use crate::{Error, Result};

/// Largest `n` for which interval partitions are enumerated.
pub const MAX_PARTITION_SIZE: usize = 12;
/// Default highest order of a series.
pub const DEFAULT_ORDER: usize = 6;
/// Cap on the number of stored entries of a single tensor.
const MAX_TENSOR_ENTRIES: usize = 1 << 16;

/// A partition of `{1, …, n}` into intervals, stored as inclusive `(start, end)` blocks in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalPartition {
    blocks: Vec<(usize, usize)>,
}

impl IntervalPartition {
    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn size(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.1)
    }
}

/// All `2^{n−1}` interval partitions of `{1, …, n}`. Bit `k` of the mask
/// cuts between `k + 1` and `k + 2`; partitions come in mask order.
pub fn interval_partitions(n: usize) -> Result<Vec<IntervalPartition>> {
    if n == 0 {
        return Err(Error::PreconditionViolated("n must be at least 1".into()));
    }
    if n > MAX_PARTITION_SIZE {
        return Err(Error::TooLarge { n, max: MAX_PARTITION_SIZE });
    }
    Ok((0u32..1 << (n - 1))
        .map(|mask| {
            let mut blocks = Vec::new();
            let mut start = 1;
            for k in 0..n - 1 {
                if mask >> k & 1 == 1 {
                    blocks.push((start, k + 1));
                    start = k + 2;
                }
            }
            blocks.push((start, n));
            IntervalPartition { blocks }
        })
        .collect())
}

/// A `C`-multilinear map `M_d^arity → M_d`.
#[derive(Clone, Debug)]
pub struct Multilinear {
    d: usize,
    arity: usize,
    /// Values on `(e_{r₁c₁}, …, e_{r_k c_k})`, first slot most significant.
    entries: Vec<Mat>,
}

impl Multilinear {
    fn tabulate(d: usize, arity: usize, f: impl Fn(&[Mat]) -> Result<Mat> + Sync) -> Result<Self> {
        let count = entry_count(d, arity)?;
        let entries = (0..count)
            .into_par_iter()
            .map(|idx| f(&unit_tuple(d, arity, idx)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, arity, entries })
    }

    pub fn zero(d: usize, arity: usize) -> Result<Self> {
        Ok(Self { d, arity, entries: vec![linalg::zeros(d, d); entry_count(d, arity)?] })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates at arbitrary arguments by expanding each in matrix units.
    pub fn eval(&self, args: &[Mat]) -> Result<Mat> {
        check_args(self.d, self.arity, args)?;
        let dd = self.d * self.d;
        let mut out = linalg::zeros(self.d, self.d);
        for (idx, value) in self.entries.iter().enumerate() {
            let mut coeff = linalg::c(1.0, 0.0);
            let mut rest = idx;
            for slot in (0..self.arity).rev() {
                let u = rest % dd;
                rest /= dd;
                coeff *= args[slot][(u / self.d, u % self.d)];
                if coeff == linalg::c(0.0, 0.0) {
                    break;
                }
            }
            if coeff != linalg::c(0.0, 0.0) {
                out += value * coeff;
            }
        }
        Ok(out)
    }

    pub fn map_values(&self, f: impl Fn(&Mat) -> Mat) -> Self {
        Self { d: self.d, arity: self.arity, entries: self.entries.iter().map(f).collect() }
    }

    /// Largest entrywise difference over all stored values.
    pub fn distance(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max)
    }

    fn add(&self, other: &Self) -> Self {
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Self { d: self.d, arity: self.arity, entries }
    }
}

fn entry_count(d: usize, arity: usize) -> Result<usize> {
    let count = (d * d).checked_pow(arity as u32).unwrap_or(usize::MAX);
    if count > MAX_TENSOR_ENTRIES {
        return Err(Error::TooLarge { n: count, max: MAX_TENSOR_ENTRIES });
    }
    Ok(count)
}

fn unit_tuple(d: usize, arity: usize, mut idx: usize) -> Vec<Mat> {
    let dd = d * d;
    let mut out = vec![linalg::zeros(d, d); arity];
    for slot in (0..arity).rev() {
        let u = idx % dd;
        idx /= dd;
        out[slot] = linalg::matrix_unit(d, u / d, u % d);
    }
    out
}

fn check_args(d: usize, arity: usize, args: &[Mat]) -> Result<()> {
    if args.len() != arity {
        return Err(Error::DimensionMismatch(format!("expected {arity} arguments, got {}", args.len())));
    }
    if args.iter().any(|b| b.nrows() != d || b.ncols() != d) {
        return Err(Error::DimensionMismatch(format!("arguments must be {d}x{d}")));
    }
    Ok(())
}

/// `(T^{[1]}, …, T^{[N]})`, where `T^{[n]}` has `n − 1` arguments.
#[derive(Clone, Debug)]
pub struct BSeries {
    d: usize,
    terms: Vec<Multilinear>,
}

impl BSeries {
    /// Tabulates `f(n, b₁, …, b_{n−1})` for `n = 1..=order`.
    pub fn from_fn(d: usize, order: usize, f: impl Fn(usize, &[Mat]) -> Result<Mat> + Sync) -> Result<Self> {
        let terms = (1..=order)
            .map(|n| Multilinear::tabulate(d, n - 1, |args| f(n, args)))
            .collect::<Result<Vec<_>>>()?;
        for t in &terms {
            if t.entries.iter().any(|m| m.nrows() != d || m.ncols() != d) {
                return Err(Error::DimensionMismatch(format!("series values must be {d}x{d}")));
            }
        }
        Ok(Self { d, terms })
    }

    /// Moment series `E[x b₁ x ⋯ b_{n−1} x]` of a realization.
    pub fn moments_of(r: &Realization, order: usize) -> Result<Self> {
        let one = linalg::identity(r.d());
        Self::from_fn(r.d(), order, |_, args| {
            let mut word = Vec::with_capacity(args.len() + 2);
            word.push(one.clone());
            word.extend_from_slice(args);
            word.push(one.clone());
            r.moment(&word)
        })
    }

    /// Boolean cumulants straight from the realization's matrix form.
    pub fn bcumulants_of(r: &Realization, order: usize) -> Result<Self> {
        Self::from_fn(r.d(), order, |_, args| r.boolean_cumulant(args))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    /// `T^{[n]}`, 1-based.
    pub fn term(&self, n: usize) -> &Multilinear {
        &self.terms[n - 1]
    }

    pub fn eval(&self, args: &[Mat]) -> Result<Mat> {
        let n = args.len() + 1;
        if n > self.order() {
            return Err(Error::DimensionMismatch(format!("series has order {}, asked for {n}", self.order())));
        }
        self.terms[n - 1].eval(args)
    }

    /// Largest difference over common orders.
    pub fn distance(&self, other: &Self) -> f64 {
        self.terms.iter().zip(&other.terms).map(|(a, b)| a.distance(b)).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d != other.d || self.order() != other.order() {
            return Err(Error::DimensionMismatch("series differ in d or order".into()));
        }
        Ok(Self { d: self.d, terms: self.terms.iter().zip(&other.terms).map(|(a, b)| a.add(b)).collect() })
    }
}

/// Boolean cumulants from a moment series, via
/// `B^{[n]} = M^{[n]} − Σ_{k<n} M^{[k]}(b₁, …, b_{k−1}) b_k B^{[n−k]}(b_{k+1}, …)`.
pub fn moments_to_bcumulants(moments: &BSeries) -> Result<BSeries> {
    let d = moments.d;
    let mut terms: Vec<Multilinear> = Vec::with_capacity(moments.order());
    for n in 1..=moments.order() {
        let arity = n - 1;
        let lower = &terms;
        let term = Multilinear::tabulate(d, arity, |args| {
            let mut acc = moments.eval(args)?;
            for k in 1..n {
                let left = moments.eval(&args[..k - 1])?;
                let right = lower[n - k - 1].eval(&args[k..])?;
                acc -= left * &args[k - 1] * right;
            }
            Ok(acc)
        })?;
        terms.push(term);
    }
    Ok(BSeries { d, terms })
}

/// `β^{[σ]}(b₁, …, b_{n−1})`: block values joined by the arguments sitting
/// between consecutive blocks.
pub fn partition_value(cumulants: &BSeries, sigma: &IntervalPartition, args: &[Mat]) -> Result<Mat> {
    let mut acc: Option<Mat> = None;
    for &(s, e) in sigma.blocks() {
        let value = cumulants.eval(&args[s - 1..e - 1])?;
        acc = Some(match acc {
            None => value,
            Some(prev) => prev * &args[s - 2] * value,
        });
    }
    acc.ok_or_else(|| Error::PreconditionViolated("empty partition".into()))
}

/// `M^{[n]}(b₁, …, b_{n−1}) = Σ_{σ ∈ IN(n)} β^{[σ]}(b₁, …, b_{n−1})` with `n = args.len() + 1`.
pub fn bcumulants_to_moments(cumulants: &BSeries, args: &[Mat]) -> Result<Mat> {
    check_args(cumulants.d, args.len(), args)?;
    let n = args.len() + 1;
    let mut acc = linalg::zeros(cumulants.d, cumulants.d);
    for sigma in interval_partitions(n)? {
        acc += partition_value(cumulants, &sigma, args)?;
    }
    Ok(acc)
}

/// The whole moment series up to the cumulant order.
pub fn bcumulants_to_moment_series(cumulants: &BSeries) -> Result<BSeries> {
    BSeries::from_fn(cumulants.d, cumulants.order(), |_, args| bcumulants_to_moments(cumulants, args))
}

/// `B^{[n]}_{μ^{⊎α}} = α ∘ B^{[n]}_μ`.
pub fn boolean_power_cumulants(cumulants: &BSeries, alpha: &CpMap) -> Result<BSeries> {
    if alpha.d() != cumulants.d {
        return Err(Error::DimensionMismatch(format!("map acts on M_{}, series on M_{}", alpha.d(), cumulants.d)));
    }
    let terms = cumulants
        .terms
        .iter()
        .map(|t| t.map_values(|m| alpha.apply_base(m)))
        .collect();
    Ok(BSeries { d: cumulants.d, terms })
}

/// Boolean cumulants `B_{n,x}(b₁, …, b_n)` defined by
/// `E[x b₁ ⋯ x b_n] = Σ_k E[x b₁ ⋯ x b_k] B_{n−k,x}(b_{k+1}, …, b_n)`.
fn popa_cumulant(r: &Realization, args: &[Mat]) -> Result<Mat> {
    let d = r.d();
    let one = linalg::identity(d);
    let n = args.len();
    // cum[j] = B_{j,x}(b_{n−j+1}, …, b_n), built from the right.
    let mut cum: Vec<Mat> = vec![linalg::zeros(d, d); n + 1];
    for j in 1..=n {
        let start = n - j;
        let mut word = Vec::with_capacity(j + 1);
        word.push(one.clone());
        word.extend_from_slice(&args[start..]);
        let mut acc = r.moment(&word)?;
        for k in 1..j {
            let mut head = Vec::with_capacity(k + 1);
            head.push(one.clone());
            head.extend_from_slice(&args[start..start + k]);
            acc -= r.moment(&head)? * &cum[j - k];
        }
        cum[j] = acc;
    }
    Ok(cum[n].clone())
}

/// Largest `‖B_{n,x}(b₁, …, b_n) − B^{[n]}_x(b₁, …, b_{n−1}) b_n‖` over the
/// given tuples, with the right side from the moment recursion.
pub fn lemma_bridge_check(r: &Realization, n: usize, tuples: &[Vec<Mat>]) -> Result<f64> {
    if n == 0 || n > DEFAULT_ORDER {
        return Err(Error::PreconditionViolated(format!("n must lie in 1..={DEFAULT_ORDER}")));
    }
    let series = moments_to_bcumulants(&BSeries::moments_of(r, n)?)?;
    tuples
        .par_iter()
        .map(|t| {
            check_args(r.d(), n, t)?;
            let lhs = popa_cumulant(r, t)?;
            let rhs = series.eval(&t[..n - 1])? * &t[n - 1];
            Ok(linalg::max_abs(&(lhs - rhs)))
        })
        .try_reduce(|| 0.0, |a, b| Ok(f64::max(a, b)))
}
