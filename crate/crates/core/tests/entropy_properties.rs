mod common;

use common::{golden_argmin, power};
use fermitherm_core::{A4Status, EntropySpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn occupation_is_the_argmin(lambda in -10.0f64..10.0, m in 1.05f64..4.0) {
        let spec = power(m);
        let g = spec.occupation(lambda);
        let oracle = golden_argmin(lambda, m);
        prop_assert!((g - oracle).abs() < 1e-10, "g = {g}, oracle = {oracle}");
    }

    #[test]
    fn legendre_identity(lambda in -10.0f64..10.0, m in 1.05f64..4.0) {
        let spec = power(m);
        let g = spec.occupation(lambda);
        let direct = lambda * g + spec.beta(g).unwrap();
        prop_assert!((spec.beta_star(lambda) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn occupation_is_nonincreasing(a in -10.0f64..10.0, b in -10.0f64..10.0, m in 1.05f64..4.0) {
        let spec = power(m);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(spec.occupation(lo) >= spec.occupation(hi));
    }

    #[test]
    fn beta_is_strictly_convex(x in 0.0f64..1.0, y in 0.0f64..1.0, m in 1.05f64..4.0) {
        prop_assume!((x - y).abs() > 1e-3);
        let spec = power(m);
        let mid = spec.beta(0.5 * (x + y)).unwrap();
        let avg = 0.5 * (spec.beta(x).unwrap() + spec.beta(y).unwrap());
        prop_assert!(mid < avg);
    }

    #[test]
    fn beta_below_its_chord(nu in 0.0f64..=1.0, m in 1.05f64..4.0) {
        let spec = power(m);
        let b = spec.beta(nu).unwrap();
        prop_assert!(b >= 0.0);
        prop_assert!(b <= spec.beta(1.0).unwrap() * nu + 1e-15);
    }

    #[test]
    fn beta_star_is_concave_and_nonpositive(a in -10.0f64..10.0, b in -10.0f64..10.0, m in 1.05f64..4.0) {
        let spec = power(m);
        let mid = spec.beta_star(0.5 * (a + b));
        prop_assert!(mid >= 0.5 * (spec.beta_star(a) + spec.beta_star(b)) - 1e-12);
        prop_assert!(spec.beta_star(a) <= 0.0);
    }

    #[test]
    fn beta_prime_inverts_occupation(lambda in -3.0f64..-0.01, m in 1.2f64..4.0) {
        let spec = power(m);
        prop_assume!(lambda > -m);
        let g = spec.occupation(lambda);
        prop_assert!((spec.beta_prime(g).unwrap() + lambda).abs() < 1e-10 * lambda.abs().max(1.0));
    }
}

#[test]
fn beta_outside_unit_interval_is_rejected() {
    let spec = power(2.0);
    assert!(spec.beta(-0.1).is_err());
    assert!(spec.beta(1.1).is_err());
    assert!(EntropySpec::power(1.0).is_err());
    assert!(EntropySpec::power(f64::NAN).is_err());
}

#[test]
fn a4_status_tracks_the_exponent() {
    for (m, converges) in [(1.5, true), (2.0, true), (2.9, true), (3.0, false), (3.5, false)] {
        let report = power(m).validate_a4(1.0, 1.0);
        assert_eq!(report.converges, converges, "m = {m}");
    }
    assert_eq!(power(2.0).a4, A4Status::Conditional);
    assert_eq!(power(3.0).a4, A4Status::Violated);
    assert_eq!(power(2.0).saturation_lambda, -2.0);
}
