use ovconv::convolve::{self, identity_check, IdentityName};
use ovconv::json::IdentityCaseJson;
use ovconv::law::Law;
use ovconv::sampling::half_plane_samples;
use ovconv::transforms;
use ovconv::{zoo, AlgElem, CpMap, SolverSettings};

fn s() -> SolverSettings {
    SolverSettings::default()
}

fn max_gap(a: &Law, b: &Law, d: usize, levels: &[usize], count: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for &n in levels {
        for p in half_plane_samples(d, n, count, seed) {
            let fa = transforms::f(a, &p, &s()).unwrap();
            let fb = transforms::f(b, &p, &s()).unwrap();
            worst = worst.max((&fa - &fb).norm());
        }
    }
    worst
}

#[test]
fn subordination_functions_decompose_free_convolution() {
    for d in [1, 2] {
        let nodes = zoo::node_examples(d).unwrap();
        let (mu, nu) = (nodes[2].clone(), nodes[4].clone());
        let sum = convolve::free_conv(mu.clone(), nu.clone()).unwrap();
        for b in half_plane_samples(d, 2, 10, 30) {
            let (w1, w2) = convolve::subordination_pair(&mu, &nu, &b, &s()).unwrap();
            let f = transforms::f(&sum, &b, &s()).unwrap();
            assert!((&(&(&w1 + &w2) - &b) - &f).norm() <= 1e-9);
            // Each function subordinates its own law.
            let f1 = transforms::f(&mu, &w1, &s()).unwrap();
            assert!((&f1 - &f).norm() <= 1e-9 * (1.0 + f.norm()));
        }
    }
}

#[test]
fn integer_free_power_is_repeated_convolution() {
    for d in [1, 2] {
        let mu = zoo::node_examples(d).unwrap()[4].clone();
        let power = convolve::free_power(mu.clone(), CpMap::scalar(d, 2.0)).unwrap();
        let twice = convolve::free_conv(mu.clone(), mu).unwrap();
        assert!(max_gap(&power, &twice, d, &[1, 2], 20, 31) <= 1e-8);
    }
}

#[test]
fn boolean_and_free_convolutions_commute() {
    let laws = zoo::laws(2).unwrap();
    let (a, b) = (laws["realization"].clone(), laws["gamma_adk"].clone());
    let ab = convolve::boolean_conv(a.clone(), b.clone()).unwrap();
    let ba = convolve::boolean_conv(b.clone(), a.clone()).unwrap();
    assert!(max_gap(&ab, &ba, 2, &[1, 2], 10, 32) <= 1e-9);
    let ab = convolve::free_conv(a.clone(), b.clone()).unwrap();
    let ba = convolve::free_conv(b, a).unwrap();
    assert!(max_gap(&ab, &ba, 2, &[1, 2], 10, 33) <= 1e-9);
}

#[test]
fn orthogonal_and_sfree_convolutions_do_not_commute() {
    let ber = Law::bernoulli(CpMap::identity(1)).unwrap();
    let one = Law::dirac(1.0);
    let b = AlgElem::iy(1, 1, 1.0);
    let gap = |x: &Law, y: &Law| (&transforms::f(x, &b, &s()).unwrap() - &transforms::f(y, &b, &s()).unwrap()).norm();
    let o1 = convolve::orthogonal_conv(ber.clone(), one.clone()).unwrap();
    let o2 = convolve::orthogonal_conv(one.clone(), ber.clone()).unwrap();
    assert!(gap(&o1, &o2) >= 1e-3);
    let s1 = convolve::sfree_conv(ber.clone(), one.clone()).unwrap();
    let s2 = convolve::sfree_conv(one, ber).unwrap();
    assert!(gap(&s1, &s2) >= 1e-3);
}

#[test]
fn monotone_convolution_with_a_point_mass_shifts() {
    // F_{μ▷δ_a}(b) = F_μ(b − a).
    let mu = zoo::laws(1).unwrap()["atomic2"].clone();
    let law = convolve::monotone_conv(mu.clone(), Law::dirac(0.7)).unwrap();
    for b in half_plane_samples(1, 2, 10, 34) {
        let shifted = &b - &AlgElem::scalar(1, 2, ovconv::algebra::linalg::c(0.7, 0.0));
        let lhs = transforms::f(&law, &b, &s()).unwrap();
        let rhs = transforms::f(&mu, &shifted, &s()).unwrap();
        assert!((&lhs - &rhs).norm() <= 1e-12);
    }
}

#[test]
fn free_power_needs_a_cp_increment() {
    let mu = Law::dirac(0.0);
    assert!(convolve::free_power(mu.clone(), CpMap::scalar(1, 0.5)).is_err());
    assert!(convolve::b_transform(mu, CpMap::scalar(1, -0.5)).is_err());
}

#[test]
fn identity_names_round_trip() {
    for &name in IdentityName::ALL {
        assert_eq!(name.as_str().parse::<IdentityName>().unwrap(), name);
    }
    assert!("NOT_AN_IDENTITY".parse::<IdentityName>().is_err());
}

#[test]
fn identity_cases_survive_json() {
    for &name in IdentityName::ALL {
        let case = zoo::default_case(name, 2, vec![1, 2], 6, 9).unwrap();
        let direct = identity_check(&case, &s()).unwrap();
        let text = serde_json::to_string(&IdentityCaseJson::from_case(&case)).unwrap();
        let parsed: IdentityCaseJson = serde_json::from_str(&text).unwrap();
        let report = identity_check(&parsed.to_case().unwrap(), &s()).unwrap();
        assert!(report.pass, "{name}");
        assert!((report.max_residual - direct.max_residual).abs() <= 1e-9, "{name}");
    }
}

#[test]
fn reports_are_deterministic() {
    let case = zoo::default_case(IdentityName::FREE_DISTRIB, 2, vec![1, 2], 8, 5).unwrap();
    let a = identity_check(&case, &s()).unwrap();
    let b = identity_check(&case, &s()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pass_flag_follows_the_tolerance() {
    let mut case = zoo::default_case(IdentityName::FREE_DISTRIB, 1, vec![1], 5, 3).unwrap();
    case.tol = 1e-30;
    let report = identity_check(&case, &s()).unwrap();
    assert!(report.max_residual > 1e-30);
    assert!(!report.pass);
}
