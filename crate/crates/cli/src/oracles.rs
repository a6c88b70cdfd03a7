//! Moment-level oracle suites run by `ovconv check` next to the identity cases.

use ovconv::algebra::linalg::{self, c};
use ovconv::combinatorics::{bcumulants_to_moments, lemma_bridge_check, BSeries};
use ovconv::convolve::CheckReport;
use ovconv::fock::{jspec_compatible, FockSpace, JSpec};
use ovconv::law::Law;
use ovconv::sampling::{gaussian_matrix, random_realization, rng};
use ovconv::{transforms, AlgElem, CpMap, Error, Mat, Realization, Result, SolverSettings};

pub const NAMES: &[&str] = &["FOCK_FREE", "FOCK_BOOLEAN", "FOCK_BRIDGE", "JSPEC_COMPAT", "LEMMA_BRIDGE"];

const FAMILIES: [&str; 5] = ["free", "boolean", "monotone", "orthogonal", "sfree"];

pub fn is_oracle(name: &str) -> bool {
    NAMES.contains(&name)
}

fn word(d: usize, k: usize, seed: u64) -> Vec<Mat> {
    let mut g = rng(seed, 11);
    (0..=k).map(|_| gaussian_matrix(&mut g, d, d)).collect()
}

/// Arcsine moments `0, 2, 0, 6, 0, 20` from the free family on two Bernoullis.
fn fock_free(d: usize) -> Result<f64> {
    let b = Realization::bernoulli(&CpMap::identity(d))?;
    let fock = FockSpace::build(&[b.clone(), b], 6)?;
    let specs = JSpec::family("free")?;
    let one = linalg::identity(d);
    let mut worst: f64 = 0.0;
    for (k, want) in [0.0, 2.0, 0.0, 6.0, 0.0, 20.0].iter().enumerate() {
        let m = fock.j_moment(&specs, &vec![one.clone(); k + 2], &[])?;
        worst = worst.max(linalg::max_abs(&(m - &one * c(*want, 0.0))));
    }
    Ok(worst)
}

/// Boolean family against summed Boolean cumulants, orders up to 6.
fn fock_boolean(d: usize, seed: u64) -> Result<f64> {
    let r1 = random_realization(d, 2, 1.0, seed);
    let r2 = random_realization(d, 2, 1.0, seed + 1);
    let sum = BSeries::bcumulants_of(&r1, 6)?.add(&BSeries::bcumulants_of(&r2, 6)?)?;
    let fock = FockSpace::build(&[r1, r2], 6)?;
    let specs = JSpec::family("boolean")?;
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let mut w = word(d, n, seed + n as u64);
        w[0] = linalg::identity(d);
        w[n] = linalg::identity(d);
        let j = fock.j_moment(&specs, &w, &[])?;
        let m = bcumulants_to_moments(&sum, &w[1..n])?;
        worst = worst.max(linalg::max_abs(&(j - m)));
    }
    Ok(worst)
}

/// Compressed `L = 8` Fock operators against the law nodes at `20i`.
fn fock_bridge(d: usize, seed: u64, settings: &SolverSettings) -> Result<f64> {
    let r1 = random_realization(d, 2, 2.0, seed);
    let r2 = random_realization(d, 1, 2.0, seed + 1);
    let fock = FockSpace::build(&[r1.clone(), r2.clone()], 8)?;
    let (l1, l2) = (Law::realization(r1), Law::realization(r2));
    let b = AlgElem::iy(d, 1, 20.0);
    let mut worst: f64 = 0.0;
    for fam in ["monotone", "orthogonal", "sfree", "free"] {
        let law = match fam {
            "monotone" => Law::monotone(l1.clone(), l2.clone())?,
            "orthogonal" => Law::orthogonal(l1.clone(), l2.clone())?,
            "sfree" => Law::sfree(l1.clone(), l2.clone())?,
            _ => Law::free(l1.clone(), l2.clone())?,
        };
        let compressed = fock.compressed(&JSpec::family(fam)?, 0)?;
        let gap = &compressed.f_eval(&b)? - &transforms::f(&law, &b, settings)?;
        worst = worst.max(gap.norm());
    }
    Ok(worst)
}

/// Builtin families are compatible and commute with their algebras; an
/// incompatible custom family is refused.
fn jspec_compat(d: usize, seed: u64) -> Result<f64> {
    let fock = FockSpace::build(&[random_realization(d, 2, 1.0, seed), random_realization(d, 1, 1.0, seed + 1)], 4)?;
    let mut worst: f64 = 0.0;
    for fam in FAMILIES {
        let specs = JSpec::family(fam)?;
        if !jspec_compatible(&specs, 8) {
            return Ok(f64::INFINITY);
        }
        for (k, spec) in specs.iter().enumerate() {
            for power in [1, 2] {
                worst = worst.max(fock.commutator_norm(k + 1, spec, power)?);
            }
        }
    }
    let bad = vec![JSpec::Custom { words: [vec![]].into_iter().collect(), suffix_last: None }, JSpec::Free];
    match fock.j_moment(&bad, &word(d, 1, seed), &[]) {
        Err(Error::IncompatibleSpec(_)) => Ok(worst),
        _ => Ok(f64::INFINITY),
    }
}

fn lemma(d: usize, seed: u64) -> Result<f64> {
    let r = random_realization(d, 2, 1.0, seed);
    let mut g = rng(seed, 1);
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let tuples: Vec<Vec<Mat>> = (0..5).map(|_| (0..n).map(|_| gaussian_matrix(&mut g, d, d)).collect()).collect();
        worst = worst.max(lemma_bridge_check(&r, n, &tuples)?);
    }
    Ok(worst)
}

pub fn run(name: &str, d: usize, seed: u64, settings: &SolverSettings) -> Result<CheckReport> {
    let (residual, tol) = match name {
        "FOCK_FREE" => (fock_free(d)?, 1e-12),
        "FOCK_BOOLEAN" => (fock_boolean(d, seed)?, 1e-10),
        "FOCK_BRIDGE" => (fock_bridge(d, seed, settings)?, 1e-7),
        "JSPEC_COMPAT" => (jspec_compat(d, seed)?, 1e-12),
        "LEMMA_BRIDGE" => (lemma(d, seed)?, 1e-10),
        other => return Err(Error::Parse(format!("unknown oracle suite {other:?}"))),
    };
    Ok(CheckReport {
        name: name.to_string(),
        d,
        tol,
        levels: Vec::new(),
        max_residual: residual,
        pass: residual <= tol,
        notes: Vec::new(),
    })
}
