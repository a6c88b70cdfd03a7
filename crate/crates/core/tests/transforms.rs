use std::f64::consts::PI;

use ovconv::algebra::linalg::{self, c};
use ovconv::law::Law;
use ovconv::sampling::{gaussian_hermitian, half_plane_samples, rng};
use ovconv::transforms::{self, density, trace_state, Grid};
use ovconv::{zoo, AlgElem, CpMap, Error, Mat, SolverSettings};

fn s() -> SolverSettings {
    SolverSettings::default()
}

#[test]
fn every_node_lifts_the_imaginary_part() {
    for d in [1, 2] {
        for law in zoo::node_examples(d).unwrap() {
            for n in [1, 2] {
                for b in half_plane_samples(d, n, 50, 17) {
                    let f = transforms::f(&law, &b, &s()).unwrap();
                    let gap = linalg::hermitian_part(&(f.imag_part() - b.imag_part()));
                    assert!(linalg::min_eigenvalue(&gap) >= -1e-9, "{} d={d}", law.kind());
                }
            }
        }
    }
}

#[test]
fn g_inverts_f() {
    for d in [1, 2] {
        for law in zoo::node_examples(d).unwrap() {
            for b in half_plane_samples(d, 2, 10, 18) {
                let f = transforms::f(&law, &b, &s()).unwrap();
                let g = transforms::g(&law, &b, &s()).unwrap();
                let one = linalg::identity(2 * d);
                assert!(linalg::spectral_norm(&(g.matrix() * f.matrix() - one)) <= 1e-10, "{}", law.kind());
                let h = transforms::h(&law, &b, &s()).unwrap();
                assert!((&(&h + &b) - &f).norm() <= 1e-12);
            }
        }
    }
}

#[test]
fn invert_f_is_a_left_inverse() {
    let settings = s();
    for d in [1, 2] {
        for law in zoo::node_examples(d).unwrap() {
            let r = transforms::inversion_radius(&law, &settings);
            let mut g = rng(19, d as u64);
            for _ in 0..5 {
                // Far enough out that F(w) lies in the inversion domain.
                let w = AlgElem::new(d, 1, gaussian_hermitian(&mut g, d) + linalg::identity(d) * c(0.0, 4.0 / r)).unwrap();
                let target = transforms::f(&law, &w, &settings).unwrap();
                let back = transforms::invert_f(&law, &target, &settings).unwrap();
                assert!((&back - &w).norm() <= 10.0 * settings.tol * w.norm(), "{}", law.kind());
            }
        }
    }
}

#[test]
fn invert_f_refuses_points_outside_the_domain() {
    let ber = Law::bernoulli(CpMap::identity(1)).unwrap();
    let e = transforms::invert_f(&ber, &AlgElem::iy(1, 1, 2.0), &s()).unwrap_err();
    assert!(matches!(e, Error::OutsideInversionDomain(_)));
}

#[test]
fn point_mass_formulas() {
    let p = Mat::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(-1.0, 0.0)]);
    let law = Law::point_mass(p.clone()).unwrap();
    for b in half_plane_samples(2, 2, 5, 20) {
        let pn = linalg::kron(&linalg::identity(2), &p);
        let g = transforms::g(&law, &b, &s()).unwrap();
        let want = linalg::inverse(&(b.matrix() - &pn)).unwrap();
        assert!(linalg::max_abs(&(g.matrix() - want)) < 1e-12);
        let h = transforms::h(&law, &b, &s()).unwrap();
        assert!(linalg::max_abs(&(h.matrix() + &pn)) < 1e-12);
    }
    let b = AlgElem::iy(2, 1, 100.0);
    let phi = transforms::voiculescu_phi(&law, &b, &s()).unwrap();
    assert!(linalg::max_abs(&(phi.matrix() - &p)) < 1e-12);
}

#[test]
fn semicircle_phi_is_its_variance_map() {
    let k = zoo::ad_k();
    let law = Law::semicircular(k.clone()).unwrap();
    for b in half_plane_samples(2, 1, 10, 21) {
        let b = b.scale(c(10.0, 0.0));
        let binv = b.inverse().unwrap();
        assert!(binv.norm() <= 0.1);
        let phi = transforms::voiculescu_phi(&law, &b, &s()).unwrap();
        let want = k.apply(&binv).unwrap();
        assert!((&phi - &want).norm() <= 1e-9);
    }
}

#[test]
fn phi_is_additive_over_free_convolution() {
    let laws = zoo::laws(2).unwrap();
    let mu = laws["ber_adk"].clone();
    let nu = laws["gamma_trace"].clone();
    let sum = Law::free(mu.clone(), nu.clone()).unwrap();
    let settings = s();
    let scale = transforms::inversion_radius(&sum, &settings);
    for b in half_plane_samples(2, 1, 10, 22) {
        let b = b.scale(c(1.0 / scale, 0.0));
        let lhs = transforms::voiculescu_phi(&sum, &b, &settings).unwrap();
        let rhs = &transforms::voiculescu_phi(&mu, &b, &settings).unwrap() + &transforms::voiculescu_phi(&nu, &b, &settings).unwrap();
        assert!((&lhs - &rhs).norm() <= 1e-8);
        let r = transforms::r_transform(&sum, &b.inverse().unwrap(), &settings).unwrap();
        assert!((&r - &lhs).norm() <= 1e-12);
    }
}

#[test]
fn semicircle_moments_are_catalan() {
    let law = Law::semicircular(CpMap::identity(1)).unwrap();
    let one = Mat::from_element(1, 1, c(1.0, 0.0));
    let expected = [0.0, 1.0, 0.0, 2.0, 0.0, 5.0, 0.0, 14.0];
    for (k, want) in expected.iter().enumerate() {
        let m = transforms::leaf_moments(&law, &vec![one.clone(); k]).unwrap();
        assert_eq!(m[(0, 0)], c(*want, 0.0), "order {}", k + 1);
    }
}

#[test]
fn bernoulli_leaf_moments() {
    let k = zoo::ad_k();
    let law = Law::bernoulli(k.clone()).unwrap();
    let mut g = rng(23, 0);
    let b: Vec<Mat> = (0..3).map(|_| gaussian_hermitian(&mut g, 2)).collect();
    let two = transforms::leaf_moments(&law, &b[..1]).unwrap();
    assert!(linalg::max_abs(&(two - k.apply_base(&b[0]))) < 1e-14);
    let four = transforms::leaf_moments(&law, &b).unwrap();
    let want = k.apply_base(&b[0]) * &b[1] * k.apply_base(&b[2]);
    assert!(linalg::max_abs(&(four - want)) < 1e-13);
    assert_eq!(transforms::leaf_moments(&law, &b[..2]).unwrap(), linalg::zeros(2, 2));
    assert!(transforms::leaf_moments(&Law::dirac(0.0), &[]).is_err());
}

#[test]
fn density_examples() {
    let grid = |t: f64| Grid { t_min: t, t_max: t, steps: 1 };
    let rho = |law: &Law, eps: f64| density(law, &trace_state(1), grid(0.0), eps, &s()).unwrap()[0].1.clone().unwrap();
    assert!((rho(&Law::dirac(0.0), 1e-2) - 1.0 / (PI * 1e-2)).abs() < 1e-9);
    let gamma = Law::semicircular(CpMap::identity(1)).unwrap();
    assert!((rho(&gamma, 1e-4) - 1.0 / PI).abs() < 5e-3);
    let ber = Law::bernoulli(CpMap::identity(1)).unwrap();
    let arcsine = Law::free(ber.clone(), ber).unwrap();
    assert!((rho(&arcsine, 1e-4) - 1.0 / (2.0 * PI)).abs() < 5e-3);
}

#[test]
fn density_is_nonnegative_for_matrix_laws() {
    let laws = zoo::laws(2).unwrap();
    let grid = Grid { t_min: -3.0, t_max: 3.0, steps: 61 };
    for name in ["gamma_adk", "realization", "ber_trace"] {
        for (t, rho) in density(&laws[name], &trace_state(2), grid, 1e-3, &s()).unwrap() {
            assert!(rho.unwrap() >= -1e-8, "{name} at {t}");
        }
    }
}

#[test]
fn density_validates_its_inputs() {
    let law = Law::dirac(0.0);
    let grid = Grid { t_min: 0.0, t_max: 1.0, steps: 3 };
    assert!(density(&law, &trace_state(1), grid, 1e-7, &s()).is_err());
    let bad = Mat::from_element(1, 1, c(2.0, 0.0));
    assert!(density(&law, &bad, grid, 1e-3, &s()).is_err());
}

#[test]
fn evaluation_outside_the_half_plane_is_refused() {
    let law = Law::semicircular(CpMap::identity(1)).unwrap();
    let b = AlgElem::base(Mat::from_element(1, 1, c(1.0, -0.5))).unwrap();
    assert!(matches!(transforms::f(&law, &b, &s()), Err(Error::NotInHalfPlane { .. })));
}
