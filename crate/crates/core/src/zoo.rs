//! The built-in model zoo and the default identity cases for `d ∈ {1, 2}`.

use std::collections::BTreeMap;

use crate::algebra::linalg::{self, c, from_real_diag};
use crate::algebra::{CpMap, Mat};
use crate::convolve::{IdentityCase, IdentityName};
use crate::law::Law;
use crate::sampling::random_realization;
use crate::{Error, Result};

/// Residual tolerance for identities whose sides are finite compositions of
/// closed forms.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Residual tolerance when a fixed-point solve appears on either side.
pub const FIXED_POINT_TOL: f64 = 1e-7;

/// `K = diag(1, 0.5)`.
pub fn k_diag() -> Mat {
    from_real_diag(&[1.0, 0.5])
}

/// `b ↦ K b K*` with `K = diag(1, 0.5)`.
pub fn ad_k() -> CpMap {
    CpMap::ad(k_diag()).expect("2x2 Kraus operator")
}

fn scaled(m: &CpMap, t: f64) -> CpMap {
    m.scale(t).expect("non-negative scale")
}

fn plus(a: &CpMap, b: &CpMap) -> CpMap {
    a.add(b).expect("same dimension")
}

fn hermitian2(a: f64, b: f64, off: f64) -> Mat {
    Mat::from_row_slice(2, 2, &[c(a, 0.0), c(off, 0.0), c(off, 0.0), c(b, 0.0)])
}

/// Named laws shipped with the CLI.
pub fn laws(d: usize) -> Result<BTreeMap<String, Law>> {
    let mut z = BTreeMap::new();
    match d {
        1 => {
            let id = CpMap::identity(1);
            let ber = Law::bernoulli(id.clone())?;
            z.insert("delta0".into(), Law::dirac(0.0));
            z.insert("delta1".into(), Law::dirac(1.0));
            z.insert("ber".into(), ber.clone());
            z.insert("gamma".into(), Law::semicircular(id)?);
            z.insert("atomic2".into(), Law::atomic(vec![-1.0, 2.0], vec![0.6, 0.4])?);
            z.insert("arcsine".into(), Law::free(ber.clone(), ber)?);
        }
        2 => {
            let e = CpMap::trace_mix(2);
            z.insert("delta0".into(), Law::point_mass(linalg::zeros(2, 2))?);
            z.insert("delta_diag".into(), Law::point_mass(from_real_diag(&[1.0, -1.0]))?);
            z.insert("ber".into(), Law::bernoulli(CpMap::identity(2))?);
            z.insert("ber_adk".into(), Law::bernoulli(ad_k())?);
            z.insert("ber_trace".into(), Law::bernoulli(e.clone())?);
            z.insert("gamma".into(), Law::semicircular(CpMap::identity(2))?);
            z.insert("gamma_adk".into(), Law::semicircular(ad_k())?);
            z.insert("gamma_trace".into(), Law::semicircular(e)?);
            z.insert("realization".into(), Law::realization(random_realization(2, 2, 1.5, 11)));
        }
        _ => return Err(Error::PreconditionViolated(format!("the zoo covers d = 1, 2 (got {d})"))),
    }
    Ok(z)
}

/// Named CP maps shipped with the CLI.
pub fn cpmaps(d: usize) -> Result<BTreeMap<String, CpMap>> {
    let mut z = BTreeMap::new();
    match d {
        1 => {
            z.insert("id".into(), CpMap::identity(1));
            z.insert("half".into(), CpMap::scalar(1, 0.5));
            z.insert("two".into(), CpMap::scalar(1, 2.0));
        }
        2 => {
            z.insert("id".into(), CpMap::identity(2));
            z.insert("adk".into(), ad_k());
            z.insert("trace".into(), CpMap::trace_mix(2));
        }
        _ => return Err(Error::PreconditionViolated(format!("the zoo covers d = 1, 2 (got {d})"))),
    }
    Ok(z)
}

struct Inputs {
    mu: Law,
    nu: Law,
    mu2: Law,
    s_var: CpMap,
    t_var: CpMap,
    p: CpMap,
    q: CpMap,
    /// An exponent `α` with `α − 1` CP.
    big: CpMap,
}

fn inputs(d: usize) -> Result<Inputs> {
    match d {
        1 => {
            let s = |t| CpMap::scalar(1, t);
            Ok(Inputs {
                mu: Law::atomic(vec![-1.0, 2.0], vec![0.6, 0.4])?,
                nu: Law::boolean(vec![Law::bernoulli(s(0.5))?, Law::dirac(0.3)])?,
                mu2: Law::semicircular(s(0.6))?,
                s_var: s(0.5),
                t_var: s(0.7),
                p: s(2.0),
                q: s(0.75),
                big: s(1.5),
            })
        }
        2 => {
            let e = CpMap::trace_mix(2);
            let id = CpMap::identity(2);
            Ok(Inputs {
                mu: Law::realization(random_realization(2, 2, 1.5, 11)),
                nu: Law::boolean(vec![
                    Law::bernoulli(scaled(&e, 0.7))?,
                    Law::point_mass(hermitian2(0.5, -0.3, 0.2))?,
                ])?,
                mu2: Law::semicircular(scaled(&ad_k(), 0.6))?,
                s_var: ad_k(),
                t_var: scaled(&e, 0.5),
                // p − 1 = 0.5 + E and 1 − p + qp = 0.25 + 0.125 E are
                // invertible and CP; p' = 3 + 2E.
                p: plus(&scaled(&id, 1.5), &e),
                q: plus(&scaled(&id, 0.5), &scaled(&e, 0.25)),
                big: plus(&id, &ad_k()),
            })
        }
        _ => Err(Error::PreconditionViolated(format!("default cases cover d = 1, 2 (got {d})"))),
    }
}

/// The default case for `name` over `M_d`, with the acceptance tolerance
/// (`1e-7` when a fixed-point solve is involved, else `1e-8`).
pub fn default_case(name: IdentityName, d: usize, levels: Vec<usize>, samples: usize, seed: u64) -> Result<IdentityCase> {
    use IdentityName::*;
    let inp = inputs(d)?;
    let mut laws = BTreeMap::new();
    let mut maps = BTreeMap::new();
    let (law_keys, map_keys) = name.inputs();
    for key in law_keys {
        let l = match *key {
            "mu" | "mu1" => inp.mu.clone(),
            "nu" => inp.nu.clone(),
            "mu2" => inp.mu2.clone(),
            _ => unreachable!("unknown law slot"),
        };
        laws.insert(key.to_string(), l);
    }
    for key in map_keys {
        let m = match (*key, name) {
            ("s", SFREE_SELF | FINV_POWER | EVOLUTION) => inp.big.clone(),
            ("s", _) => inp.s_var.clone(),
            ("t", _) => inp.t_var.clone(),
            ("p", _) => inp.p.clone(),
            ("q", _) => inp.q.clone(),
            ("alpha", _) => inp.big.clone(),
            _ => unreachable!("unknown map slot"),
        };
        maps.insert(key.to_string(), m);
    }
    let iterative = !matches!(name, ORTH_DECOMP) || laws.values().any(Law::is_iterative);
    let tol = if iterative { FIXED_POINT_TOL } else { CLOSED_FORM_TOL };
    Ok(IdentityCase { name, laws, cpmaps: maps, levels, samples, seed, tol })
}

/// One law of every node kind over `M_d` (`atomic` only at `d = 1`), built
/// from the default inputs.
pub fn node_examples(d: usize) -> Result<Vec<Law>> {
    let inp = inputs(d)?;
    let (mu, nu, mu2) = (inp.mu, inp.nu, inp.mu2);
    let mut out = vec![
        Law::point_mass(mu.mean())?,
        Law::realization(random_realization(d, 2, 1.0, 7)),
        Law::bernoulli(inp.s_var.clone())?,
        Law::semicircular(inp.t_var.clone())?,
        Law::boolean(vec![mu.clone(), nu.clone()])?,
        Law::monotone(mu.clone(), mu2.clone())?,
        Law::orthogonal(nu.clone(), mu.clone())?,
        Law::free(mu.clone(), mu2.clone())?,
        Law::sfree(mu2.clone(), nu.clone())?,
        Law::boolean_power(nu.clone(), inp.s_var.clone())?,
        Law::free_power(mu.clone(), inp.big.clone())?,
        Law::b_transform(nu.clone(), inp.s_var)?,
        Law::phi(mu2),
    ];
    if d == 1 {
        out.push(mu);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoo_builds_for_both_dimensions() {
        for d in [1, 2] {
            assert!(!laws(d).unwrap().is_empty());
            assert!(!cpmaps(d).unwrap().is_empty());
            for &name in IdentityName::ALL {
                default_case(name, d, vec![1], 3, 1).unwrap();
            }
        }
        assert!(laws(3).is_err());
        let kinds: std::collections::BTreeSet<_> = node_examples(1).unwrap().iter().map(Law::kind).collect();
        assert_eq!(kinds.len(), 14);
    }

    #[test]
    fn exchange_exponents_at_d2() {
        let inp = inputs(2).unwrap();
        let one = CpMap::identity(2);
        let qp = inp.q.compose(&inp.p).unwrap();
        let qprime = one.sub(&inp.p).unwrap().add(&qp).unwrap();
        let expected = plus(&scaled(&one, 0.25), &scaled(&CpMap::trace_mix(2), 0.125));
        assert!(qprime.distance(&expected) < 1e-14);
    }
}
