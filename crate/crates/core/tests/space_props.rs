use cohk::catalog::{make_space, SpaceSpec};
use cohk::sampling::{rng, sample_point};
use cohk::space::PsdTolerance;
use cohk::Point;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_catalog_gram_is_psd(seed in any::<u64>(), n in 1usize..26) {
        let mut r = rng(seed);
        for spec in SpaceSpec::standard() {
            let space = make_space(&spec).unwrap();
            let pts: Vec<Point> = (0..n).map(|_| sample_point(space.domain(), &mut r)).collect();
            let rep = space.gram(&pts).unwrap().psd_check(PsdTolerance::default()).unwrap();
            prop_assert!(rep.pass, "{}: min eig {:e}", space.id(), rep.min_eigenvalue);
        }
    }

    #[test]
    fn potential_obeys_the_log_cauchy_schwarz_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        for spec in SpaceSpec::standard() {
            let space = make_space(&spec).unwrap();
            let z = sample_point(space.domain(), &mut r);
            let w = sample_point(space.domain(), &mut r);
            let (pzw, pzz, pww) = (space.potential(&z, &w).unwrap(), space.potential(&z, &z).unwrap(), space.potential(&w, &w).unwrap());
            if let (Some(a), Some(b), Some(c)) = (pzw.finite(), pzz.finite(), pww.finite()) {
                prop_assert!(2.0 * a.re <= b.re + c.re + 1e-10 * (b.re.abs() + c.re.abs()).max(1.0), "{}", space.id());
            }
        }
    }

    #[test]
    fn angle_is_in_range_and_zero_on_the_diagonal(seed in any::<u64>()) {
        let mut r = rng(seed);
        for spec in SpaceSpec::standard() {
            let space = make_space(&spec).unwrap();
            let z = sample_point(space.domain(), &mut r);
            let w = sample_point(space.domain(), &mut r);
            let a = space.angle(&z, &w).unwrap();
            prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&a));
            prop_assert!(space.angle(&z, &z).unwrap() < 1e-7);
        }
    }
}
