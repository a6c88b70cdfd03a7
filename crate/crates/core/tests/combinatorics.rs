use ovconv::algebra::linalg::{self, c};
use ovconv::combinatorics::{
    bcumulants_to_moment_series, bcumulants_to_moments, boolean_power_cumulants, interval_partitions,
    lemma_bridge_check, moments_to_bcumulants, BSeries,
};
use ovconv::fock::{FockSpace, JSpec};
use ovconv::sampling::{gaussian_matrix, random_realization, rng};
use ovconv::{zoo, CpMap, Error, Mat, Realization};
use proptest::prelude::*;

fn tensors(d: usize, order: usize, seed: u64) -> BSeries {
    BSeries::from_fn(d, order, |n, args| {
        let mut g = rng(seed, n as u64);
        let base = gaussian_matrix(&mut g, d, d);
        Ok(args.iter().fold(base, |acc, b| {
            let w = gaussian_matrix(&mut g, d, d);
            acc * b * w
        }))
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn partition_count(n in 1usize..=10) {
        prop_assert_eq!(interval_partitions(n).unwrap().len(), 1 << (n - 1));
    }

    #[test]
    fn cumulants_round_trip(seed in any::<u64>(), d in 1usize..3) {
        // Random multilinear maps, not necessarily coming from a variable.
        let b = tensors(d, 5, seed);
        let m = bcumulants_to_moment_series(&b).unwrap();
        let back = moments_to_bcumulants(&m).unwrap();
        let zero = BSeries::from_fn(d, 5, |_, _| Ok(linalg::zeros(d, d))).unwrap();
        let scale = 1.0 + m.distance(&zero);
        prop_assert!(back.distance(&b) <= 1e-11 * scale);
    }
}

#[test]
fn round_trip_on_a_realization_to_order_six() {
    let r = random_realization(2, 2, 1.0, 3);
    let m = BSeries::moments_of(&r, 6).unwrap();
    let b = moments_to_bcumulants(&m).unwrap();
    assert!(bcumulants_to_moment_series(&b).unwrap().distance(&m) <= 1e-11);
    assert!(BSeries::bcumulants_of(&r, 6).unwrap().distance(&b) <= 1e-11);
}

#[test]
fn boolean_cumulants_add_under_the_boolean_family() {
    let r1 = random_realization(2, 2, 1.0, 4);
    let r2 = random_realization(2, 1, 1.0, 5);
    let fock = FockSpace::build(&[r1.clone(), r2.clone()], 6).unwrap();
    let specs = JSpec::family("boolean").unwrap();
    let one = linalg::identity(2);
    let joint = BSeries::from_fn(2, 6, |_, args| {
        let mut word = vec![one.clone()];
        word.extend_from_slice(args);
        word.push(one.clone());
        fock.j_moment(&specs, &word, &[])
    })
    .unwrap();
    let lhs = moments_to_bcumulants(&joint).unwrap();
    let rhs = BSeries::bcumulants_of(&r1, 6).unwrap().add(&BSeries::bcumulants_of(&r2, 6).unwrap()).unwrap();
    assert!(lhs.distance(&rhs) <= 1e-10);
}

#[test]
fn lemma_bridge_examples() {
    let point = Realization::point_mass(Mat::from_element(1, 1, c(0.4, 0.0))).unwrap();
    let t: Vec<Vec<Mat>> = (0..3).map(|k| vec![Mat::from_element(1, 1, c(k as f64 - 1.0, 0.5)); 3]).collect();
    assert!(lemma_bridge_check(&point, 3, &t).unwrap() <= 1e-14);
    let r = random_realization(2, 2, 1.0, 6);
    let mut g = rng(6, 1);
    for n in 1..=6 {
        let tuples: Vec<Vec<Mat>> = (0..5).map(|_| (0..n).map(|_| gaussian_matrix(&mut g, 2, 2)).collect()).collect();
        assert!(lemma_bridge_check(&r, n, &tuples).unwrap() <= 1e-10, "n = {n}");
    }
    assert!(lemma_bridge_check(&r, 7, &[]).is_err());
}

#[test]
fn boolean_power_of_cumulants_matches_the_realization() {
    let r = random_realization(2, 2, 1.5, 7);
    for alpha in [zoo::ad_k(), CpMap::trace_mix(2), CpMap::identity(2)] {
        let b = BSeries::bcumulants_of(&r, 6).unwrap();
        let powered = boolean_power_cumulants(&b, &alpha).unwrap();
        let direct = BSeries::moments_of(&r.boolean_power(&alpha).unwrap(), 6).unwrap();
        assert!(bcumulants_to_moment_series(&powered).unwrap().distance(&direct) <= 1e-10);
    }
    assert!(matches!(
        boolean_power_cumulants(&BSeries::bcumulants_of(&r, 2).unwrap(), &CpMap::identity(1)),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn evaluation_checks_shapes() {
    let b = tensors(2, 3, 1);
    assert!(bcumulants_to_moments(&b, &[linalg::identity(3)]).is_err());
    assert!(b.eval(&vec![linalg::identity(2); 3]).is_err());
    assert!(matches!(BSeries::from_fn(2, 12, |_, _| Ok(linalg::zeros(2, 2))), Err(Error::TooLarge { .. })));
}
