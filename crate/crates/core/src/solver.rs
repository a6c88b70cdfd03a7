//! Fixed-point machinery shared by every iterative law node.
//!
//! Iterations run on the matricial upper half-plane. A raw iterate that
//! leaves the half-plane is pulled back towards the previous one by repeated
//! damping. Near the real axis plain iteration becomes neutrally stable, so
//! after `newton_after` sweeps the solver switches to Newton steps with a
//! finite-difference Jacobian of the (holomorphic) map.

use crate::algebra::linalg::{self, c};
use crate::algebra::{AlgElem, Mat};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    /// Relative step tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Iteration cap when the evaluation point has `Im b` below `near_axis`.
    pub max_iter_near_axis: usize,
    pub near_axis: f64,
    /// Factor applied to a step whose raw iterate leaves the half-plane.
    pub damping: f64,
    /// Smallest admissible `Im b` for transform evaluation.
    pub eps_min: f64,
    /// Plain sweeps before Newton acceleration kicks in.
    pub newton_after: usize,
    /// Overrides the adaptive inversion radius.
    pub r_inv: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            max_iter_near_axis: 100_000,
            near_axis: 1e-2,
            damping: 0.5,
            eps_min: 1e-6,
            newton_after: 400,
            r_inv: None,
        }
    }
}

impl SolverSettings {
    pub fn iteration_cap(&self, b: &AlgElem) -> usize {
        if b.min_imag() < self.near_axis {
            self.max_iter_near_axis
        } else {
            self.max_iter
        }
    }
}

fn step_norm(a: &Mat, b: &Mat) -> f64 {
    linalg::max_abs(&(a - b))
}

fn in_half_plane(w: &AlgElem) -> bool {
    w.min_imag() > 0.0
}

/// Solves `ω = g(ω)` starting from `start`.
///
/// `theta` is the relaxation weight of a regular step (`1` for plain
/// iteration, `0.5` for averaged iteration). `anchor` is the evaluation point
/// that selects the iteration cap.
pub fn fixed_point<G>(anchor: &AlgElem, start: AlgElem, theta: f64, settings: &SolverSettings, g: G) -> Result<AlgElem>
where
    G: Fn(&AlgElem) -> Result<AlgElem>,
{
    let cap = settings.iteration_cap(anchor);
    let mut w = start;
    let mut last_step = f64::INFINITY;
    for it in 0..cap {
        if it >= settings.newton_after && it % settings.newton_after == 0 {
            if let Ok(sol) = newton(&w, settings, &g) {
                return Ok(sol);
            }
        }
        let raw = g(&w)?;
        let mut t = theta;
        let mut next = relax(&w, &raw, t);
        let mut tries = 0;
        while !in_half_plane(&next) {
            t *= settings.damping;
            tries += 1;
            if tries > 60 {
                return Err(Error::NonConvergence { iterations: it, residual: last_step });
            }
            next = relax(&w, &raw, t);
        }
        last_step = step_norm(next.matrix(), w.matrix());
        let scale = 1.0 + next.norm_max();
        w = next;
        if last_step <= settings.tol * scale {
            return Ok(w);
        }
        if !last_step.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence { iterations: cap, residual: last_step })
}

fn relax(w: &AlgElem, raw: &AlgElem, t: f64) -> AlgElem {
    if t == 1.0 {
        return raw.clone();
    }
    w.map(|m| m * c(1.0 - t, 0.0) + raw.matrix() * c(t, 0.0))
}

/// Newton iteration on `r(ω) = g(ω) − ω` with a central-difference Jacobian.
fn newton<G>(start: &AlgElem, settings: &SolverSettings, g: &G) -> Result<AlgElem>
where
    G: Fn(&AlgElem) -> Result<AlgElem>,
{
    let dim = start.dim();
    let nunk = dim * dim;
    let (d, n) = (start.d(), start.n());
    let unit = |k: usize, h: f64| {
        let mut e = linalg::zeros(dim, dim);
        e[(k / dim, k % dim)] = c(h, 0.0);
        e
    };
    let residual = |w: &AlgElem| -> Result<Mat> { Ok(g(w)?.into_matrix() - w.matrix()) };
    let mut w = start.clone();
    let mut r = residual(&w)?;
    for _ in 0..30 {
        let h = 1e-6 * (1.0 + w.norm_max());
        let mut jac = linalg::zeros(nunk, nunk);
        for k in 0..nunk {
            let e = unit(k, h);
            let plus = AlgElem::from_parts(d, n, w.matrix() + &e);
            let minus = AlgElem::from_parts(d, n, w.matrix() - &e);
            let dr = (residual(&plus)? - residual(&minus)?) / c(2.0 * h, 0.0);
            for q in 0..nunk {
                jac[(q, k)] = dr[(q / dim, q % dim)];
            }
        }
        let rhs = Mat::from_fn(nunk, 1, |q, _| -r[(q / dim, q % dim)]);
        let delta = linalg::solve(&jac, &rhs)?;
        let delta = Mat::from_fn(dim, dim, |i, j| delta[(i * dim + j, 0)]);
        let mut t = 1.0;
        let mut next = AlgElem::from_parts(d, n, w.matrix() + &delta);
        let mut tries = 0;
        while !in_half_plane(&next) {
            t *= 0.5;
            tries += 1;
            if tries > 40 {
                return Err(Error::NonConvergence { iterations: 0, residual: f64::INFINITY });
            }
            next = AlgElem::from_parts(d, n, w.matrix() + &delta * c(t, 0.0));
        }
        let step = linalg::max_abs(&delta) * t;
        w = next;
        r = residual(&w)?;
        let scale = 1.0 + w.norm_max();
        if step <= settings.tol * scale && linalg::max_abs(&r) <= 10.0 * settings.tol * scale {
            return Ok(w);
        }
        if linalg::max_abs(&r) <= 0.1 * settings.tol * scale {
            return Ok(w);
        }
    }
    Err(Error::NonConvergence { iterations: 30, residual: linalg::max_abs(&r) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_golden_ratio() {
        // ω = i − 1/(i − 1/ω) has the fixed point iφ.
        let b = AlgElem::iy(1, 1, 1.0);
        let s = SolverSettings::default();
        let w = fixed_point(&b, b.clone(), 1.0, &s, |w| {
            let inner = (&b - &w.inverse()?).inverse()?;
            Ok(&b - &inner)
        })
        .unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((w.matrix()[(0, 0)] - c(0.0, phi)).norm() < 1e-11);
    }

    #[test]
    fn newton_rescues_neutral_iteration() {
        // Near the real axis the same map is almost neutral at z = 0.
        let b = AlgElem::scalar(1, 1, c(0.0, 1e-4));
        let s = SolverSettings::default();
        let w = fixed_point(&b, b.clone(), 1.0, &s, |w| {
            let inner = (&b - &w.inverse()?).inverse()?;
            Ok(&b - &inner)
        })
        .unwrap();
        let z = c(0.0, 1e-4);
        let f = (z * z - 4.0).sqrt();
        let f = if f.im < 0.0 { -f } else { f };
        let expected = (f + z) / 2.0;
        assert!((w.matrix()[(0, 0)] - expected).norm() < 1e-8);
    }

    #[test]
    fn reports_non_convergence() {
        let b = AlgElem::iy(1, 1, 1.0);
        let s = SolverSettings { max_iter: 3, newton_after: 1000, ..Default::default() };
        let r = fixed_point(&b, b.clone(), 1.0, &s, |w| Ok(&w.scale(c(0.5, 0.0)) + &b));
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }
}
