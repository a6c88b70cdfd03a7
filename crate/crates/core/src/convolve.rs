//! Convolution constructors and the identity-check harness.
//!
//! Each identity is checked by evaluating both sides' `F` (or `φ` for
//! `FINV_POWER` and `R_SUBORD`) at seeded half-plane points. Two laws agree
//! iff their matricial `F` families agree, so pointwise residuals are the
//! natural test statistic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AlgElem, CpFlag, CpMap};
use crate::law::Law;
use crate::sampling::half_plane_samples;
use crate::solver::SolverSettings;
use crate::transforms::{self, inversion_radius};
use crate::{Error, Result};

pub use crate::transforms::subordination_pair;

pub fn boolean_conv(mu: Law, nu: Law) -> Result<Law> {
    Law::boolean(vec![mu, nu])
}

pub fn monotone_conv(mu: Law, nu: Law) -> Result<Law> {
    Law::monotone(mu, nu)
}

pub fn orthogonal_conv(mu: Law, nu: Law) -> Result<Law> {
    Law::orthogonal(mu, nu)
}

pub fn sfree_conv(mu: Law, nu: Law) -> Result<Law> {
    Law::sfree(mu, nu)
}

pub fn free_conv(mu: Law, nu: Law) -> Result<Law> {
    Law::free(mu, nu)
}

pub fn boolean_power(mu: Law, alpha: CpMap) -> Result<Law> {
    Law::boolean_power(mu, alpha)
}

pub fn free_power(mu: Law, alpha: CpMap) -> Result<Law> {
    Law::free_power(mu, alpha)
}

pub fn b_transform(mu: Law, s: CpMap) -> Result<Law> {
    Law::b_transform(mu, s)
}

pub fn phi_transform(mu: Law) -> Law {
    Law::phi(mu)
}

macro_rules! identities {
    ($($v:ident => $s:literal),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        #[allow(non_camel_case_types)]
        pub enum IdentityName { $($v),* }

        impl IdentityName {
            pub const ALL: &'static [IdentityName] = &[$(IdentityName::$v),*];

            pub fn as_str(self) -> &'static str {
                match self { $(IdentityName::$v => $s),* }
            }
        }

        impl FromStr for IdentityName {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(IdentityName::$v),)*
                    other => Err(Error::Parse(format!("unknown identity {other:?}"))),
                }
            }
        }
    };
}

identities! {
    ORTH_SFREE => "ORTH_SFREE",
    BER_GAMMA => "BER_GAMMA",
    PHI_GAMMA => "PHI_GAMMA",
    BB_SEMIGROUP => "BB_SEMIGROUP",
    EXCHANGE => "EXCHANGE",
    SFREE_SELF => "SFREE_SELF",
    FREE_DISTRIB => "FREE_DISTRIB",
    POWER_DISTRIB => "POWER_DISTRIB",
    EVOLUTION => "EVOLUTION",
    DECOMP_MONOTONE => "DECOMP_MONOTONE",
    DECOMP_BOOLEAN => "DECOMP_BOOLEAN",
    ORTH_DECOMP => "ORTH_DECOMP",
    FINV_POWER => "FINV_POWER",
    R_SUBORD => "R_SUBORD",
}

impl fmt::Display for IdentityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl IdentityName {
    /// Law and map slots the identity reads from an [`IdentityCase`].
    pub fn inputs(self) -> (&'static [&'static str], &'static [&'static str]) {
        use IdentityName::*;
        match self {
            ORTH_SFREE | ORTH_DECOMP | R_SUBORD => (&["mu", "nu"], &[]),
            BER_GAMMA => (&[], &["s"]),
            PHI_GAMMA => (&["mu"], &[]),
            BB_SEMIGROUP => (&["mu"], &["s", "t"]),
            EXCHANGE => (&["mu"], &["p", "q"]),
            SFREE_SELF | FINV_POWER => (&["mu"], &["s"]),
            FREE_DISTRIB => (&["mu1", "mu2", "nu"], &[]),
            POWER_DISTRIB => (&["mu", "nu"], &["alpha"]),
            EVOLUTION => (&["mu", "nu"], &["s"]),
            DECOMP_MONOTONE | DECOMP_BOOLEAN => (&["mu1", "mu2"], &[]),
        }
    }

    /// Whether the identity compares Voiculescu transforms instead of `F`.
    pub fn uses_inverse(self) -> bool {
        matches!(self, IdentityName::FINV_POWER | IdentityName::R_SUBORD)
    }
}

/// Descriptor of one identity check.
#[derive(Clone, Debug)]
pub struct IdentityCase {
    pub name: IdentityName,
    pub laws: BTreeMap<String, Law>,
    pub cpmaps: BTreeMap<String, CpMap>,
    pub levels: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelReport {
    pub n: usize,
    pub samples: usize,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub d: usize,
    pub tol: f64,
    pub levels: Vec<LevelReport>,
    pub max_residual: f64,
    pub pass: bool,
    /// Informational remarks, e.g. exponents whose CP check failed.
    pub notes: Vec<String>,
}

/// One side of an identity: either `F` of a law, or a general function of `b`.
enum Side {
    F(Law),
    Fun(Box<dyn Fn(&AlgElem, &SolverSettings) -> Result<AlgElem> + Send + Sync>),
}

impl Side {
    fn eval(&self, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
        match self {
            Side::F(law) => transforms::f(law, b, settings),
            Side::Fun(f) => f(b, settings),
        }
    }
}

struct Prepared {
    lhs: Side,
    rhs: Side,
    /// Scale applied to sample points (inversion-domain checks).
    scale: f64,
    notes: Vec<String>,
}

fn law<'a>(case: &'a IdentityCase, key: &str) -> Result<&'a Law> {
    case.laws
        .get(key)
        .ok_or_else(|| Error::PreconditionViolated(format!("{} needs law {key:?}", case.name)))
}

fn map<'a>(case: &'a IdentityCase, key: &str) -> Result<&'a CpMap> {
    case.cpmaps
        .get(key)
        .ok_or_else(|| Error::PreconditionViolated(format!("{} needs map {key:?}", case.name)))
}

fn require_cp(case: &IdentityCase, what: &str, m: &CpMap) -> Result<()> {
    if !m.is_cp() {
        return Err(Error::PreconditionViolated(format!(
            "{}: {what} must be completely positive (min Choi eigenvalue {:e})",
            case.name,
            m.min_choi_eigenvalue()
        )));
    }
    Ok(())
}

fn b_transform_note(notes: &mut Vec<String>, label: &str, s: &CpMap) {
    if let Ok(inv) = s.one_plus().invert() {
        if inv.clone().verified().flag() != CpFlag::VerifiedCp {
            notes.push(format!("(1+{label})^-1 is not completely positive; applied as a formal exponent"));
        }
    }
}

fn prepare(case: &IdentityCase, settings: &SolverSettings) -> Result<Prepared> {
    use IdentityName::*;
    let mut notes = Vec::new();
    let mut scale = 1.0;
    let (lhs, rhs) = match case.name {
        ORTH_SFREE => {
            let (mu, nu) = (law(case, "mu")?, law(case, "nu")?);
            let l = Law::orthogonal(mu.clone(), Law::sfree(nu.clone(), mu.clone())?)?;
            (Side::F(l), Side::F(Law::sfree(mu.clone(), nu.clone())?))
        }
        BER_GAMMA => {
            let s = map(case, "s")?;
            require_cp(case, "s", s)?;
            let gamma = Law::semicircular(s.clone())?;
            let l = Law::orthogonal(Law::bernoulli(s.clone())?, gamma.clone())?;
            (Side::F(l), Side::F(gamma))
        }
        PHI_GAMMA => {
            let mu = law(case, "mu")?;
            let gamma = Law::semicircular(CpMap::identity(mu.d()))?;
            let l = Law::sfree(gamma.clone(), mu.clone())?;
            (Side::F(l), Side::F(Law::phi(Law::free(gamma, mu.clone())?)))
        }
        BB_SEMIGROUP => {
            let mu = law(case, "mu")?;
            let (s, t) = (map(case, "s")?, map(case, "t")?);
            require_cp(case, "s", s)?;
            require_cp(case, "t", t)?;
            let st = s.add(t)?;
            for (label, m) in [("s", s), ("t", t), ("s+t", &st)] {
                b_transform_note(&mut notes, label, m);
            }
            let l = Law::b_transform(Law::b_transform(mu.clone(), t.clone())?, s.clone())?;
            (Side::F(l), Side::F(Law::b_transform(mu.clone(), st)?))
        }
        EXCHANGE => {
            let mu = law(case, "mu")?;
            let (p, q) = (map(case, "p")?, map(case, "q")?);
            require_cp(case, "p", p)?;
            require_cp(case, "q", q)?;
            let d = mu.d();
            let one = CpMap::identity(d);
            let pm1 = p.sub(&one)?;
            require_cp(case, "p-1", &pm1)?;
            pm1.invert()
                .map_err(|_| Error::PreconditionViolated("EXCHANGE: p-1 must be invertible".into()))?;
            let qp = q.compose(p)?;
            let q_prime = one.sub(p)?.add(&qp)?;
            require_cp(case, "1-p+qp", &q_prime)?;
            let q_inv = q_prime
                .invert()
                .map_err(|_| Error::PreconditionViolated("EXCHANGE: 1-p+qp must be invertible".into()))?;
            let p_prime = qp.compose(&q_inv)?;
            require_cp(case, "p'-1", &p_prime.sub(&one)?)?;
            let l = Law::boolean_power(Law::free_power(mu.clone(), p.clone())?, q.clone())?;
            let r = Law::free_power(Law::boolean_power(mu.clone(), q_prime)?, p_prime)?;
            (Side::F(l), Side::F(r))
        }
        SFREE_SELF => {
            let mu = law(case, "mu")?;
            let s = map(case, "s")?;
            require_cp(case, "s", s)?;
            let ms = Law::boolean_power(mu.clone(), s.clone())?;
            let l = Law::sfree(ms.clone(), ms)?;
            let b1 = Law::b_transform(mu.clone(), CpMap::identity(mu.d()))?;
            (Side::F(l), Side::F(Law::free_power(b1, s.clone())?))
        }
        FREE_DISTRIB => {
            let (m1, m2, nu) = (law(case, "mu1")?, law(case, "mu2")?, law(case, "nu")?);
            let l = Law::sfree(Law::free(m1.clone(), m2.clone())?, nu.clone())?;
            let r = Law::free(Law::sfree(m1.clone(), nu.clone())?, Law::sfree(m2.clone(), nu.clone())?)?;
            (Side::F(l), Side::F(r))
        }
        POWER_DISTRIB => {
            let (mu, nu) = (law(case, "mu")?, law(case, "nu")?);
            let alpha = map(case, "alpha")?;
            let l = Law::free_power(Law::sfree(mu.clone(), nu.clone())?, alpha.clone())?;
            let r = Law::sfree(Law::free_power(mu.clone(), alpha.clone())?, nu.clone())?;
            (Side::F(l), Side::F(r))
        }
        EVOLUTION => {
            let (mu, nu) = (law(case, "mu")?, law(case, "nu")?);
            let s = map(case, "s")?;
            require_cp(case, "s", s)?;
            b_transform_note(&mut notes, "s", s);
            let l = Law::b_transform(Law::sfree(mu.clone(), nu.clone())?, s.clone())?;
            let inner = Law::free(Law::free_power(mu.clone(), s.clone())?, nu.clone())?;
            (Side::F(l), Side::F(Law::sfree(mu.clone(), inner)?))
        }
        DECOMP_MONOTONE => {
            let (m1, m2) = (law(case, "mu1")?, law(case, "mu2")?);
            let l = Law::monotone(m2.clone(), Law::sfree(m1.clone(), m2.clone())?)?;
            (Side::F(l), Side::F(Law::free(m1.clone(), m2.clone())?))
        }
        DECOMP_BOOLEAN => {
            let (m1, m2) = (law(case, "mu1")?, law(case, "mu2")?);
            let r = Law::boolean(vec![Law::sfree(m1.clone(), m2.clone())?, Law::sfree(m2.clone(), m1.clone())?])?;
            (Side::F(Law::free(m1.clone(), m2.clone())?), Side::F(r))
        }
        ORTH_DECOMP => {
            let (mu, nu) = (law(case, "mu")?, law(case, "nu")?);
            let l = Law::monotone(mu.clone(), nu.clone())?;
            let r = Law::boolean(vec![nu.clone(), Law::orthogonal(mu.clone(), nu.clone())?])?;
            (Side::F(l), Side::F(r))
        }
        FINV_POWER => {
            let mu = law(case, "mu")?.clone();
            let s = map(case, "s")?.clone();
            let power = Law::free_power(mu.clone(), s.clone())?;
            scale = 1.0 / inversion_radius(&mu, settings).min(inversion_radius(&power, settings));
            let l = Side::Fun(Box::new(move |b, st| transforms::invert_f(&power, b, st)));
            let r = Side::Fun(Box::new(move |b, st| {
                let w = transforms::invert_f(&mu, b, st)?;
                Ok(&(&s.apply(&w)? + b) - &s.apply(b)?)
            }));
            (l, r)
        }
        R_SUBORD => {
            let (mu, nu) = (law(case, "mu")?.clone(), law(case, "nu")?.clone());
            let sub = Law::sfree(mu.clone(), nu.clone())?;
            scale = 1.0 / inversion_radius(&mu, settings).min(inversion_radius(&sub, settings));
            let l = Side::Fun(Box::new(move |b, st| transforms::voiculescu_phi(&sub, b, st)));
            let r = Side::Fun(Box::new(move |b, st| {
                let w = transforms::f(&nu, b, st)?;
                transforms::voiculescu_phi(&mu, &w, st)
            }));
            (l, r)
        }
    };
    Ok(Prepared { lhs, rhs, scale, notes })
}

fn case_d(case: &IdentityCase) -> Result<usize> {
    let ds: Vec<usize> = case
        .laws
        .values()
        .map(Law::d)
        .chain(case.cpmaps.values().map(CpMap::d))
        .collect();
    let d = *ds.first().ok_or_else(|| Error::PreconditionViolated("case has no inputs".into()))?;
    if ds.iter().any(|&x| x != d) {
        return Err(Error::DimensionMismatch("case inputs differ in d".into()));
    }
    Ok(d)
}

/// Evaluates both sides at `samples` seeded points per level.
pub fn identity_check(case: &IdentityCase, settings: &SolverSettings) -> Result<CheckReport> {
    if case.levels.is_empty() || case.levels.contains(&0) {
        return Err(Error::PreconditionViolated("levels must be positive".into()));
    }
    if case.samples == 0 {
        return Err(Error::PreconditionViolated("need at least one sample".into()));
    }
    let d = case_d(case)?;
    let prepared = prepare(case, settings)?;
    let mut levels = Vec::with_capacity(case.levels.len());
    for &n in &case.levels {
        let points = half_plane_samples(d, n, case.samples, case.seed);
        let residuals = points
            .par_iter()
            .map(|b| {
                let b = b.scale(crate::algebra::linalg::c(prepared.scale, 0.0));
                let l = prepared.lhs.eval(&b, settings)?;
                let r = prepared.rhs.eval(&b, settings)?;
                Ok((&l - &r).norm())
            })
            .collect::<Result<Vec<f64>>>()?;
        let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
        levels.push(LevelReport { n, samples: case.samples, max_residual });
    }
    let max_residual = levels.iter().map(|l| l.max_residual).fold(0.0, f64::max);
    Ok(CheckReport {
        name: case.name.to_string(),
        d,
        tol: case.tol,
        pass: max_residual <= case.tol,
        levels,
        max_residual,
        notes: prepared.notes,
    })
}
