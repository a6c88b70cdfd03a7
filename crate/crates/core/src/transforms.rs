//! Evaluators on law trees: `F`, `G`, `h`, the inverse of `F`, the
//! Voiculescu transform `φ`, the R-transform, leaf moments and densities.

use rayon::prelude::*;

use crate::algebra::linalg::{self, c};
use crate::algebra::{AlgElem, CpMap, Mat};
use crate::law::{Law, Node};
use crate::solver::{fixed_point, SolverSettings};
use crate::{Error, Result};

fn check_point(law: &Law, b: &AlgElem, eps: f64) -> Result<()> {
    if b.d() != law.d() {
        return Err(Error::DimensionMismatch(format!(
            "law over M_{} evaluated at an element over M_{}",
            law.d(),
            b.d()
        )));
    }
    let min_im = b.min_imag();
    if !(min_im >= eps) {
        return Err(Error::NotInHalfPlane { min_im, eps });
    }
    Ok(())
}

/// `F_{μ,n}(b)`.
pub fn f(law: &Law, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    check_point(law, b, settings.eps_min)?;
    eval(law, b, settings)
}

/// `G_{μ,n}(b) = F_{μ,n}(b)⁻¹`.
pub fn g(law: &Law, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    f(law, b, settings)?.inverse()
}

/// `h_{μ,n}(b) = F_{μ,n}(b) − b`.
pub fn h(law: &Law, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    Ok(&f(law, b, settings)? - b)
}

fn h_inner(law: &Law, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    Ok(&eval(law, b, settings)? - b)
}

fn apply(map: &CpMap, b: &AlgElem) -> Result<AlgElem> {
    map.apply(b)
}

/// The damped fixed point `ω = b + h_μ(b + h_ν(ω))`, i.e. `F_{μ⊠ν}(b)`.
fn sfree_omega(mu: &Law, nu: &Law, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    fixed_point(b, b.clone(), 1.0, settings, |w| {
        let inner = b + &h_inner(nu, w, settings)?;
        Ok(b + &h_inner(mu, &inner, settings)?)
    })
}

fn eval(law: &Law, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    let min_im = b.min_imag();
    if !(min_im > 0.0) {
        return Err(Error::NotInHalfPlane { min_im, eps: 0.0 });
    }
    let n = b.n();
    match law.node() {
        Node::PointMass(p) => Ok(b.map(|m| m - linalg::kron(&linalg::identity(n), p))),
        Node::Atomic { atoms, weights } => {
            let mut gsum = linalg::zeros(n, n);
            for (t, w) in atoms.iter().zip(weights) {
                let shifted = b.matrix() - linalg::identity(n) * c(*t, 0.0);
                gsum += linalg::inverse(&shifted)? * c(*w, 0.0);
            }
            Ok(AlgElem::new(1, n, linalg::inverse(&gsum)?)?)
        }
        Node::Realization(r) => r.f_eval(b),
        Node::Bernoulli(s) => Ok(b - &apply(s, &b.inverse()?)?),
        Node::Semicircular(s) => fixed_point(b, b.clone(), 0.5, settings, |w| Ok(b - &apply(s, &w.inverse()?)?)),
        Node::Boolean(parts) => {
            let k = parts.len() as f64;
            let mut acc = b.scale(c(1.0 - k, 0.0));
            for p in parts {
                acc = &acc + &eval(p, b, settings)?;
            }
            Ok(acc)
        }
        Node::Monotone(mu, nu) => eval(mu, &eval(nu, b, settings)?, settings),
        Node::Orthogonal(mu, nu) => {
            let w = eval(nu, b, settings)?;
            Ok(&(&eval(mu, &w, settings)? - &w) + b)
        }
        Node::SFree(mu, nu) => sfree_omega(mu, nu, b, settings),
        Node::Free(mu, nu) => {
            let w1 = sfree_omega(nu, mu, b, settings)?;
            eval(mu, &w1, settings)
        }
        Node::BooleanPower(mu, alpha) => {
            let fm = eval(mu, b, settings)?;
            Ok(&(&apply(alpha, &fm)? + b) - &apply(alpha, b)?)
        }
        Node::FreePower { mu, eta, .. } => {
            let w = power_omega(mu, eta, b, settings)?;
            eval(mu, &w, settings)
        }
        Node::BTrans { expanded, .. } => eval(expanded, b, settings),
        Node::Phi(mu) => Ok(b - &eval(mu, b, settings)?.inverse()?),
    }
}

/// `ω = b + η_n(h_μ(ω))`, the subordination function of `μ^{⊞(1+η)}`.
fn power_omega(mu: &Law, eta: &CpMap, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    fixed_point(b, b.clone(), 1.0, settings, |w| Ok(b + &apply(eta, &h_inner(mu, w, settings)?)?))
}

/// Subordination functions `(ω₁, ω₂)` of `μ ⊞ ν` at `b`:
/// `ω₁ = F_{ν⊠μ}(b)` and `ω₂ = F_{μ⊠ν}(b)`, each from its own solve.
pub fn subordination_pair(mu: &Law, nu: &Law, b: &AlgElem, settings: &SolverSettings) -> Result<(AlgElem, AlgElem)> {
    check_point(mu, b, settings.eps_min)?;
    check_point(nu, b, settings.eps_min)?;
    let w1 = sfree_omega(nu, mu, b, settings)?;
    let w2 = sfree_omega(mu, nu, b, settings)?;
    Ok((w1, w2))
}

/// Subordination function of `μ^{⊞α}` at `b` (`α − 1` must be CP).
pub fn power_subordination(mu: &Law, alpha: &CpMap, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    check_point(mu, b, settings.eps_min)?;
    let eta = alpha.sub(&CpMap::identity(alpha.d()))?;
    eta.require_cp()?;
    power_omega(mu, &eta, b, settings)
}

/// Radius of the inversion domain `{‖b⁻¹‖ ≤ r}`: the override in `settings`
/// or `0.1 / (1 + ‖E[x]‖)`.
pub fn inversion_radius(law: &Law, settings: &SolverSettings) -> f64 {
    settings
        .r_inv
        .unwrap_or_else(|| 0.1 / (1.0 + linalg::spectral_norm(&law.mean())))
}

/// Left inverse of `F` on the inversion domain, by `w ← target − h(w)`.
pub fn invert_f(law: &Law, target: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    if target.d() != law.d() {
        return Err(Error::DimensionMismatch("target and law differ in d".into()));
    }
    let r = inversion_radius(law, settings);
    let inv_norm = target.inverse()?.norm();
    if inv_norm > r * (1.0 + 1e-12) {
        return Err(Error::OutsideInversionDomain(format!("‖b⁻¹‖ = {inv_norm:e} exceeds radius {r:e}")));
    }
    let min_im = target.min_imag();
    if min_im < 1.0 - 1e-12 {
        return Err(Error::OutsideInversionDomain(format!("min Im eigenvalue {min_im:e} below 1")));
    }
    fixed_point(target, target.clone(), 1.0, settings, |w| Ok(target - &h_inner(law, w, settings)?))
}

/// `φ_μ(b) = F_μ^{⟨−1⟩}(b) − b`.
pub fn voiculescu_phi(law: &Law, b: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    Ok(&invert_f(law, b, settings)? - b)
}

/// `R_μ(c) = φ_μ(c⁻¹)`.
pub fn r_transform(law: &Law, c_: &AlgElem, settings: &SolverSettings) -> Result<AlgElem> {
    voiculescu_phi(law, &c_.inverse()?, settings)
}

fn check_word(d: usize, word: &[Mat]) -> Result<()> {
    if word.iter().any(|b| b.nrows() != d || b.ncols() != d) {
        return Err(Error::DimensionMismatch(format!("word entries must be {d}x{d}")));
    }
    Ok(())
}

/// `E[x b₁ x ⋯ b_{k−1} x]` for a Bernoulli or semicircular leaf; `word`
/// holds `b₁, …, b_{k−1}`.
pub fn leaf_moments(leaf: &Law, word: &[Mat]) -> Result<Mat> {
    let d = leaf.d();
    check_word(d, word)?;
    match leaf.node() {
        Node::Bernoulli(s) => Ok(bernoulli_moment(s, word)),
        Node::Semicircular(s) => Ok(semicircular_moment(s, word)),
        _ => Err(Error::PreconditionViolated(format!(
            "leaf moments need a Bernoulli or semicircular leaf, got {}",
            leaf.kind()
        ))),
    }
}

/// Only `B^{[2]} = s` survives, so the moment is `s(b₁) b₂ s(b₃) ⋯`.
fn bernoulli_moment(s: &CpMap, word: &[Mat]) -> Mat {
    let d = s.d();
    let k = word.len() + 1;
    if k % 2 == 1 {
        return linalg::zeros(d, d);
    }
    let mut out = s.apply_base(&word[0]);
    let mut i = 1;
    while i + 1 < word.len() {
        out = out * &word[i] * s.apply_base(&word[i + 1]);
        i += 2;
    }
    out
}

/// Pair the first `x` with the `j`-th one and recurse inside and after.
fn semicircular_moment(s: &CpMap, word: &[Mat]) -> Mat {
    let d = s.d();
    let k = word.len() + 1;
    if k % 2 == 1 {
        return linalg::zeros(d, d);
    }
    let mut total = linalg::zeros(d, d);
    for j in (2..=k).step_by(2) {
        let inner = if j == 2 {
            word[0].clone()
        } else {
            &word[0] * semicircular_moment(s, &word[1..j - 2]) * &word[j - 2]
        };
        let outer = if j == k {
            linalg::identity(d)
        } else {
            &word[j - 1] * semicircular_moment(s, &word[j..])
        };
        total += s.apply_base(&inner) * outer;
    }
    total
}

/// The default state for densities: normalized trace on `M_d`.
pub fn trace_state(d: usize) -> Mat {
    linalg::identity(d) * c(1.0 / d as f64, 0.0)
}

/// Grid specification for [`density`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.t_min];
        }
        let h = (self.t_max - self.t_min) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.t_min + h * k as f64).collect()
    }
}

/// `ρ(t) = −(1/π) Im tr(state · G(t + iε))` on a grid; failures stay per point.
pub fn density(law: &Law, state: &Mat, grid: Grid, epsilon: f64, settings: &SolverSettings) -> Result<Vec<(f64, Result<f64>)>> {
    let d = law.d();
    if !(epsilon >= 1e-6) {
        return Err(Error::PreconditionViolated(format!("epsilon {epsilon:e} below 1e-6")));
    }
    if grid.steps == 0 || !(grid.t_min <= grid.t_max) || !grid.t_min.is_finite() || !grid.t_max.is_finite() {
        return Err(Error::PreconditionViolated("invalid grid".into()));
    }
    if state.nrows() != d || state.ncols() != d {
        return Err(Error::DimensionMismatch(format!("state must be {d}x{d}")));
    }
    if !linalg::is_hermitian(state, 1e-12) {
        return Err(Error::NotHermitian("state".into()));
    }
    if linalg::min_eigenvalue(state) < -1e-12 || (state.trace() - c(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::PreconditionViolated("state must be PSD with unit trace".into()));
    }
    let settings = SolverSettings { eps_min: settings.eps_min.min(epsilon), ..settings.clone() };
    Ok(grid
        .points()
        .into_par_iter()
        .map(|t| {
            let b = AlgElem::scalar(d, 1, c(t, epsilon));
            let rho = g(law, &b, &settings).map(|gv| -(state * gv.matrix()).trace().im / std::f64::consts::PI);
            (t, rho)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> SolverSettings {
        SolverSettings::default()
    }

    fn at_i() -> AlgElem {
        AlgElem::iy(1, 1, 1.0)
    }

    fn val(e: &AlgElem) -> crate::C64 {
        e.matrix()[(0, 0)]
    }

    #[test]
    fn f_examples() {
        assert_eq!(val(&f(&Law::dirac(0.0), &at_i(), &s()).unwrap()), c(0.0, 1.0));
        let ber = Law::bernoulli(CpMap::identity(1)).unwrap();
        assert!((val(&f(&ber, &at_i(), &s()).unwrap()) - c(0.0, 2.0)).norm() < 1e-14);
        let gamma = Law::semicircular(CpMap::identity(1)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((val(&f(&gamma, &at_i(), &s()).unwrap()) - c(0.0, phi)).norm() < 1e-10);
        assert!((val(&g(&gamma, &at_i(), &s()).unwrap()) - c(0.0, -0.6180339887498949)).norm() < 1e-10);
    }

    #[test]
    fn h_of_point_mass_is_constant() {
        let b = AlgElem::scalar(1, 1, c(0.4, 2.0));
        assert!((val(&h(&Law::dirac(1.5), &b, &s()).unwrap()) - c(-1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn f_refuses_points_below_eps() {
        let b = AlgElem::scalar(1, 1, c(0.0, 1e-8));
        assert!(matches!(f(&Law::dirac(0.0), &b, &s()), Err(Error::NotInHalfPlane { .. })));
    }

    #[test]
    fn invert_f_examples() {
        let target = AlgElem::iy(1, 1, 20.0);
        let w = invert_f(&Law::dirac(0.5), &target, &s()).unwrap();
        assert!((val(&w) - c(0.5, 20.0)).norm() < 1e-13);

        let wide = SolverSettings { r_inv: Some(1.0), ..s() };
        let gamma = Law::semicircular(CpMap::identity(1)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let w = invert_f(&gamma, &AlgElem::iy(1, 1, phi), &wide).unwrap();
        assert!((val(&w) - c(0.0, 1.0)).norm() < 1e-10);

        // 2i is the image of the critical point i of F_Ber, where the inverse
        // is only determined to about the square root of machine precision.
        let ber = Law::bernoulli(CpMap::identity(1)).unwrap();
        let w = invert_f(&ber, &AlgElem::iy(1, 1, 2.0), &wide).unwrap();
        assert!((val(&w) - c(0.0, 1.0)).norm() < 1e-6);

        assert!(matches!(
            invert_f(&ber, &AlgElem::iy(1, 1, 2.0), &s()),
            Err(Error::OutsideInversionDomain(_))
        ));
    }

    #[test]
    fn phi_of_semicircle_is_its_variance_map() {
        let gamma = Law::semicircular(CpMap::identity(1)).unwrap();
        let b = AlgElem::scalar(1, 1, c(3.0, 20.0));
        let phi = voiculescu_phi(&gamma, &b, &s()).unwrap();
        assert!((val(&phi) - val(&b.inverse().unwrap())).norm() < 1e-9);
        let pm = voiculescu_phi(&Law::dirac(0.25), &b, &s()).unwrap();
        assert!((val(&pm) - c(0.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn catalan_moments() {
        let gamma = Law::semicircular(CpMap::identity(1)).unwrap();
        let one = Mat::from_element(1, 1, c(1.0, 0.0));
        let expected = [1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0, 0.0, 14.0];
        for (k, e) in expected.iter().enumerate().skip(1) {
            let m = leaf_moments(&gamma, &vec![one.clone(); k - 1]).unwrap();
            assert!((m[(0, 0)] - c(*e, 0.0)).norm() < 1e-14, "order {k}");
        }
    }

    #[test]
    fn bernoulli_leaf_moments() {
        let ber = Law::bernoulli(CpMap::scalar(1, 0.5)).unwrap();
        let b = Mat::from_element(1, 1, c(0.2, 0.3));
        let m2 = leaf_moments(&ber, &[b.clone()]).unwrap();
        assert!((m2[(0, 0)] - b[(0, 0)] * 0.5).norm() < 1e-15);
        assert!(leaf_moments(&ber, &[b.clone(), b]).unwrap()[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn poisson_kernel_density() {
        let grid = Grid { t_min: 0.0, t_max: 0.0, steps: 1 };
        let rho = density(&Law::dirac(0.0), &trace_state(1), grid, 1e-2, &s()).unwrap();
        let v = rho[0].1.clone().unwrap();
        assert!((v - 1.0 / (std::f64::consts::PI * 1e-2)).abs() < 1e-10);
    }
}
