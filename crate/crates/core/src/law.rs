//! The law tree.
//!
//! A [`Law`] is a leaf distribution or a convolution node over shared base
//! dimension `d`. Nodes hold their children behind `Arc`, so cloning a tree
//! and sharing subtrees across threads is cheap. Constructors validate the
//! structural invariants; evaluation lives in [`crate::transforms`].

use std::sync::Arc;

use crate::algebra::linalg::{self, c};
use crate::algebra::{CpMap, Mat};
use crate::realization::Realization;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub enum Node {
    PointMass(Mat),
    /// Scalar measure `Σ w_k δ_{t_k}` (`d = 1`).
    Atomic { atoms: Vec<f64>, weights: Vec<f64> },
    Realization(Arc<Realization>),
    Bernoulli(CpMap),
    Semicircular(CpMap),
    Boolean(Vec<Arc<Law>>),
    Monotone(Arc<Law>, Arc<Law>),
    Orthogonal(Arc<Law>, Arc<Law>),
    Free(Arc<Law>, Arc<Law>),
    SFree(Arc<Law>, Arc<Law>),
    BooleanPower(Arc<Law>, CpMap),
    /// `μ^{⊞α}`; `eta = α − 1` is verified CP.
    FreePower { mu: Arc<Law>, alpha: CpMap, eta: CpMap },
    /// `𝔹_s(μ)`, kept together with its expansion
    /// `(μ^{⊞(1+s)})^{⊎(1+s)⁻¹}`.
    BTrans { mu: Arc<Law>, s: CpMap, expanded: Arc<Law> },
    Phi(Arc<Law>),
}

#[derive(Clone, Debug)]
pub struct Law {
    d: usize,
    node: Node,
}

fn same_d(a: &Law, b: &Law) -> Result<()> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch(format!("laws over M_{} and M_{}", a.d, b.d)));
    }
    Ok(())
}

fn map_d(law: &Law, map: &CpMap) -> Result<()> {
    if law.d != map.d() {
        return Err(Error::DimensionMismatch(format!(
            "law over M_{} with a map on M_{}",
            law.d,
            map.d()
        )));
    }
    Ok(())
}

impl Law {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    /// Short lowercase tag of the node kind.
    pub fn kind(&self) -> &'static str {
        match &self.node {
            Node::PointMass(_) => "point_mass",
            Node::Atomic { .. } => "atomic",
            Node::Realization(_) => "realization",
            Node::Bernoulli(_) => "bernoulli",
            Node::Semicircular(_) => "semicircular",
            Node::Boolean(_) => "boolean",
            Node::Monotone(..) => "monotone",
            Node::Orthogonal(..) => "orthogonal",
            Node::Free(..) => "free",
            Node::SFree(..) => "sfree",
            Node::BooleanPower(..) => "boolean_power",
            Node::FreePower { .. } => "free_power",
            Node::BTrans { .. } => "b_transform",
            Node::Phi(_) => "phi",
        }
    }

    pub fn point_mass(p: Mat) -> Result<Self> {
        let r = Realization::point_mass(p)?;
        Ok(Self { d: r.d(), node: Node::PointMass(r.p().clone()) })
    }

    /// `δ_a` over `M_1`.
    pub fn dirac(a: f64) -> Self {
        Self::point_mass(Mat::from_element(1, 1, c(a, 0.0))).expect("real scalar")
    }

    pub fn atomic(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        // Validates weights and atoms.
        Realization::atomic_scalar(&atoms, &weights)?;
        Ok(Self { d: 1, node: Node::Atomic { atoms, weights } })
    }

    pub fn realization(r: Realization) -> Self {
        Self { d: r.d(), node: Node::Realization(Arc::new(r)) }
    }

    pub fn bernoulli(s: CpMap) -> Result<Self> {
        s.require_cp()?;
        Ok(Self { d: s.d(), node: Node::Bernoulli(s) })
    }

    pub fn semicircular(s: CpMap) -> Result<Self> {
        s.require_cp()?;
        Ok(Self { d: s.d(), node: Node::Semicircular(s) })
    }

    pub fn boolean(parts: Vec<Law>) -> Result<Self> {
        let first = parts.first().ok_or(Error::DimensionMismatch("empty Boolean node".into()))?;
        for p in &parts {
            same_d(first, p)?;
        }
        let d = first.d;
        Ok(Self { d, node: Node::Boolean(parts.into_iter().map(Arc::new).collect()) })
    }

    pub fn monotone(mu: Law, nu: Law) -> Result<Self> {
        same_d(&mu, &nu)?;
        Ok(Self { d: mu.d, node: Node::Monotone(Arc::new(mu), Arc::new(nu)) })
    }

    pub fn orthogonal(mu: Law, nu: Law) -> Result<Self> {
        same_d(&mu, &nu)?;
        Ok(Self { d: mu.d, node: Node::Orthogonal(Arc::new(mu), Arc::new(nu)) })
    }

    pub fn free(mu: Law, nu: Law) -> Result<Self> {
        same_d(&mu, &nu)?;
        Ok(Self { d: mu.d, node: Node::Free(Arc::new(mu), Arc::new(nu)) })
    }

    pub fn sfree(mu: Law, nu: Law) -> Result<Self> {
        same_d(&mu, &nu)?;
        Ok(Self { d: mu.d, node: Node::SFree(Arc::new(mu), Arc::new(nu)) })
    }

    /// `μ^{⊎α}`. The evaluator is affine in `α`, so non-CP exponents are
    /// accepted; callers can inspect `alpha.flag()`.
    pub fn boolean_power(mu: Law, alpha: CpMap) -> Result<Self> {
        map_d(&mu, &alpha)?;
        Ok(Self { d: mu.d, node: Node::BooleanPower(Arc::new(mu), alpha) })
    }

    pub fn free_power(mu: Law, alpha: CpMap) -> Result<Self> {
        map_d(&mu, &alpha)?;
        let eta = alpha.sub(&CpMap::identity(alpha.d()))?;
        eta.require_cp()?;
        Ok(Self { d: mu.d, node: Node::FreePower { mu: Arc::new(mu), alpha, eta } })
    }

    pub fn b_transform(mu: Law, s: CpMap) -> Result<Self> {
        map_d(&mu, &s)?;
        s.require_cp()?;
        let one_plus = s.one_plus();
        let inv = one_plus.invert()?;
        let expanded = Law::boolean_power(Law::free_power(mu.clone(), one_plus)?, inv)?;
        Ok(Self { d: mu.d, node: Node::BTrans { mu: Arc::new(mu), s, expanded: Arc::new(expanded) } })
    }

    pub fn phi(mu: Law) -> Self {
        Self { d: mu.d, node: Node::Phi(Arc::new(mu)) }
    }

    /// First moment `E[x]`.
    pub fn mean(&self) -> Mat {
        let d = self.d;
        match &self.node {
            Node::PointMass(p) => p.clone(),
            Node::Atomic { atoms, weights } => {
                let m: f64 = atoms.iter().zip(weights).map(|(t, w)| t * w).sum();
                Mat::from_element(1, 1, c(m, 0.0))
            }
            Node::Realization(r) => r.p().clone(),
            Node::Bernoulli(_) | Node::Semicircular(_) | Node::Phi(_) => linalg::zeros(d, d),
            Node::Boolean(parts) => parts.iter().fold(linalg::zeros(d, d), |acc, p| acc + p.mean()),
            Node::Monotone(a, b) | Node::Free(a, b) => a.mean() + b.mean(),
            Node::Orthogonal(a, _) | Node::SFree(a, _) => a.mean(),
            Node::BooleanPower(mu, alpha) | Node::FreePower { mu, alpha, .. } => alpha.apply_base(&mu.mean()),
            Node::BTrans { expanded, .. } => expanded.mean(),
        }
    }

    /// Whether the tree contains a node evaluated by fixed-point iteration.
    pub fn is_iterative(&self) -> bool {
        match &self.node {
            Node::Semicircular(_) | Node::Free(..) | Node::SFree(..) | Node::FreePower { .. } | Node::BTrans { .. } => true,
            Node::PointMass(_) | Node::Atomic { .. } | Node::Realization(_) | Node::Bernoulli(_) => false,
            Node::Boolean(parts) => parts.iter().any(|p| p.is_iterative()),
            Node::Monotone(a, b) | Node::Orthogonal(a, b) => a.is_iterative() || b.is_iterative(),
            Node::BooleanPower(mu, _) | Node::Phi(mu) => mu.is_iterative(),
        }
    }

    /// Exact finite realization, when the tree is built only from point
    /// masses, atomic measures, realizations, Bernoulli leaves, Boolean
    /// sums and Boolean powers with CP exponents.
    pub fn to_realization(&self) -> Option<Realization> {
        match &self.node {
            Node::PointMass(p) => Realization::point_mass(p.clone()).ok(),
            Node::Atomic { atoms, weights } => Realization::atomic_scalar(atoms, weights).ok(),
            Node::Realization(r) => Some((**r).clone()),
            Node::Bernoulli(s) => Realization::bernoulli(s).ok(),
            Node::BooleanPower(mu, alpha) if alpha.is_cp() => mu.to_realization()?.boolean_power(alpha).ok(),
            Node::Boolean(parts) => {
                let rs = parts.iter().map(|p| p.to_realization()).collect::<Option<Vec<_>>>()?;
                boolean_sum(&rs).ok()
            }
            _ => None,
        }
    }
}

/// Realization of `μ₁ ⊎ ⋯ ⊎ μ_k`: corners add, the `M°` parts sit side by side.
pub fn boolean_sum(parts: &[Realization]) -> Result<Realization> {
    let first = parts.first().ok_or(Error::DimensionMismatch("empty Boolean sum".into()))?;
    let d = first.d();
    if parts.iter().any(|r| r.d() != d) {
        return Err(Error::DimensionMismatch("realizations differ in d".into()));
    }
    let m: usize = parts.iter().map(|r| r.m()).sum();
    let mut p = linalg::zeros(d, d);
    let mut alpha = linalg::zeros(m * d, d);
    let mut t = linalg::zeros(m * d, m * d);
    let mut off = 0;
    for r in parts {
        p += r.p();
        let md = r.m() * d;
        alpha.view_mut((off, 0), (md, d)).copy_from(r.alpha());
        t.view_mut((off, off), (md, md)).copy_from(r.t());
        off += md;
    }
    Realization::new(d, p, alpha, t)
}
