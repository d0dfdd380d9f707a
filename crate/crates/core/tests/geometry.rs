mod common;

use causentropy::constants::PhysicalConstants;
use causentropy::geometry::{self, Regime, RegulatorScheme};
use causentropy::transfer::{self, EntropyLedger};
use causentropy::Error;
use proptest::prelude::*;

fn regulated(d: i64, delta: f64, c0_tilde: f64) -> RegulatorScheme {
    RegulatorScheme {
        d,
        delta,
        d_ge: delta * 100.0,
        d_geom: delta * 1e4,
        c0_tilde,
        c0: c0_tilde / 4.0,
        ..RegulatorScheme::unit()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn planck_scale_values() {
    let si = PhysicalConstants::default();
    let l2 = geometry::planck_scale(4, &si).unwrap();
    assert!(rel(l2, 6.57e-69) < 2e-3, "{l2:e}");
    let doubled = PhysicalConstants { newton_g: 2.0 * si.newton_g, ..si };
    assert_eq!(geometry::planck_scale(4, &doubled).unwrap(), 2.0 * l2);
    assert_eq!(geometry::planck_scale(5, &si).unwrap(), l2);
    assert!(geometry::planck_scale_is_dimensionally_consistent(4));
    assert!(!geometry::planck_scale_is_dimensionally_consistent(5));
    assert!(matches!(geometry::planck_scale(2, &si), Err(Error::BadDimension(2))));
}

#[test]
fn area_law_examples() {
    let unit = RegulatorScheme::unit();
    assert_eq!(geometry::area_from_entropy(7.0, &unit, Regime::Regulated).unwrap(), 7.0);
    assert_eq!(geometry::entropy_from_area(7.0, &unit, Regime::Regulated).unwrap(), 7.0);
    assert_eq!(geometry::entropy_from_area(0.0, &unit, Regime::GeomScale).unwrap(), 0.0);
    let a = geometry::area_from_entropy(5.0, &regulated(4, 2.0, 0.1), Regime::Regulated).unwrap();
    assert!(rel(a, 200.0) < 1e-15);
    assert_eq!(geometry::area_from_entropy(3.0, &unit, Regime::GeomScale).unwrap(), 3.0);

    let bad = RegulatorScheme { c0_tilde: 0.0, ..unit };
    assert!(matches!(geometry::area_from_entropy(1.0, &bad, Regime::Regulated), Err(Error::InvalidScheme(_))));
    assert!(geometry::area_from_entropy(-1.0, &unit, Regime::Regulated).is_err());
}

#[test]
fn regimes_agree_when_densities_match() {
    let mut rng = common::rng(11);
    for _ in 0..200 {
        let mut s = common::random_scheme(&mut rng);
        s.c0_tilde = std::f64::consts::TAU * s.cutoff_area() / s.planck_factor;
        for entropy in [0.0, 0.3, 17.0, 1e6] {
            let a = geometry::area_from_entropy(entropy, &s, Regime::Regulated).unwrap();
            let b = geometry::area_from_entropy(entropy, &s, Regime::GeomScale).unwrap();
            assert!(rel(a, b) <= 1e-12);
        }
    }
}

#[test]
fn series_examples() {
    let s = RegulatorScheme { c0: 0.7, c2: 0.0, tau: 2.5, delta: 2.5, ..RegulatorScheme::unit() };
    assert!(rel(geometry::geometric_entropy_series(&s).unwrap(), 0.7) < 1e-15);
    let s = RegulatorScheme { d: 6, c0: 1.0, c2: 1.0, tau: 2.0, delta: 1.0, ..RegulatorScheme::unit() };
    assert_eq!(geometry::geometric_entropy_series(&s).unwrap(), 20.0);
    assert!(matches!(
        geometry::geometric_entropy_series(&RegulatorScheme { delta: 0.0, ..s }),
        Err(Error::ZeroCutoff)
    ));
    let mut last = 0.0;
    for k in 0..20 {
        let v = geometry::geometric_entropy_series(&RegulatorScheme { delta: 0.5f64.powi(k), ..s }).unwrap();
        assert!(v > last);
        last = v;
    }
    // Pure area law: S/τ^(d-2) independent of τ.
    let density: Vec<f64> = [0.5, 1.0, 4.0]
        .iter()
        .map(|&tau| geometry::geometric_entropy_series(&RegulatorScheme { tau, c2: 0.0, ..s }).unwrap() / tau.powi(4))
        .collect();
    assert!(density.windows(2).all(|w| rel(w[0], w[1]) < 1e-14));
}

#[test]
fn regulator_examples() {
    let base = RegulatorScheme::unit();
    let ok = RegulatorScheme { delta: 1e-3, d_ge: 1.0, d_geom: 1e3, separation_factor: 100.0, ..base };
    assert!(geometry::validate_regulators(&ok).passed);
    let bad = RegulatorScheme { delta: 1.0, d_ge: 10.0, d_geom: 1e6, separation_factor: 100.0, ..base };
    let report = geometry::validate_regulators(&bad);
    assert!(!report.passed);
    assert_eq!(report.delta_ratio, 10.0);
    let edge = RegulatorScheme { delta: 1.0, d_ge: 100.0, d_geom: 1e4, ..base };
    assert!(geometry::validate_regulators(&edge).passed);
}

#[test]
fn expansion_examples() {
    let unit = RegulatorScheme::unit();
    let out = transfer::apply_transfer(&EntropyLedger::new(1.0, 0.9, 0.8, 0.5, 0.6, 0.2)).unwrap();
    let geo = geometry::expansion_delta(&out, &unit).unwrap();
    assert!((geo.delta_area - 0.7).abs() < 1e-12);
    assert!((geo.horizon_l_prime - geo.horizon_l - 0.7).abs() < 1e-12);
    assert!(geo.is_expanding());
    assert_eq!(geo.area_g, geo.horizon_l);

    let doubled = causentropy::transfer::TransferOutcome {
        delta_s_g: 2.0 * out.delta_s_g,
        s_g_prime: out.s_g_prime + out.delta_s_g,
        ..out
    };
    let geo2 = geometry::expansion_delta(&doubled, &unit).unwrap();
    assert!(rel(geo2.delta_area, 2.0 * geo.delta_area) < 1e-15);

    let flat = causentropy::transfer::TransferOutcome { delta_s_g: 0.0, ..out };
    assert!(matches!(geometry::expansion_delta(&flat, &unit), Err(Error::NonPositiveDelta(_))));
    let tight = RegulatorScheme { d_ge: 10.0, ..unit };
    assert!(matches!(geometry::expansion_delta(&out, &tight), Err(Error::RegulatorViolation(_))));
}

#[test]
fn bridge_examples() {
    let unit = RegulatorScheme::unit();
    assert_eq!(geometry::susskind_uglum_entropy(8.0, &unit).unwrap(), 2.0);
    assert_eq!(geometry::susskind_uglum_area(2.0, &unit).unwrap(), 8.0);
    assert_eq!(geometry::bekenstein_hawking_delta(0.0, 3.0).unwrap(), 0.0);
    assert_eq!(geometry::bekenstein_hawking_delta(12.0, 3.0).unwrap(), 1.0);
    assert!(matches!(geometry::bekenstein_hawking_delta(1.0, 0.0), Err(Error::NonPositiveG(_))));
    let inconsistent = RegulatorScheme { c0: 1.0, ..unit };
    assert!(matches!(
        geometry::susskind_uglum_entropy(1.0, &inconsistent),
        Err(Error::SchemeInconsistent { .. })
    ));
}

#[test]
fn scheme_json_defaults() {
    let s: RegulatorScheme = serde_json::from_str(
        r#"{"d":4,"delta":1,"d_ge":100,"d_geom":10000,"c0_tilde":1,"c0":0.25,"tau":1}"#,
    )
    .unwrap();
    assert_eq!(s.separation_factor, 100.0);
    assert_eq!(s.c2, 0.0);
    assert!(serde_json::from_str::<RegulatorScheme>(r#"{"d":4,"bogus":1}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn round_trips_both_regimes(seed in any::<u64>(), s in 0.0..1e4f64) {
        let scheme = common::random_scheme(&mut common::rng(seed));
        for regime in [Regime::Regulated, Regime::GeomScale] {
            let a = geometry::area_from_entropy(s, &scheme, regime).unwrap();
            let back = geometry::entropy_from_area(a, &scheme, regime).unwrap();
            prop_assert!((back - s).abs() <= 1e-12 * s.max(1.0));
        }
        let a = geometry::susskind_uglum_area(s, &scheme).unwrap();
        prop_assert!((geometry::susskind_uglum_entropy(a, &scheme).unwrap() - s).abs() <= 1e-12 * s.max(1.0));
    }

    #[test]
    fn area_is_monotone(seed in any::<u64>(), s1 in 0.0..1e3f64, s2 in 0.0..1e3f64) {
        prop_assume!(s1 != s2);
        let scheme = common::random_scheme(&mut common::rng(seed));
        for regime in [Regime::Regulated, Regime::GeomScale] {
            let (a1, a2) = (
                geometry::area_from_entropy(s1, &scheme, regime).unwrap(),
                geometry::area_from_entropy(s2, &scheme, regime).unwrap(),
            );
            prop_assert_eq!(s1 > s2, a1 > a2);
        }
    }

    #[test]
    fn bridge_expressions_agree(seed in any::<u64>(), area in 0.0..1e3f64) {
        let scheme = common::random_scheme(&mut common::rng(seed));
        let su = geometry::susskind_uglum_entropy(area, &scheme).unwrap();
        let bh = geometry::bekenstein_hawking_delta(area, scheme.effective_newton_g()).unwrap();
        let law = scheme.c0 * area / scheme.cutoff_area();
        prop_assert!(rel(su, bh) <= 1e-12);
        prop_assert!(rel(su, law) <= 1e-12);
    }

    #[test]
    fn shrinking_delta_keeps_a_valid_hierarchy(seed in any::<u64>(), factor in 1e-6..1.0f64) {
        let scheme = common::random_scheme(&mut common::rng(seed));
        prop_assert!(geometry::validate_regulators(&scheme).passed);
        let smaller = RegulatorScheme { delta: scheme.delta * factor, ..scheme };
        prop_assert!(geometry::validate_regulators(&smaller).passed);
    }

    #[test]
    fn expansion_grows_with_transfer(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let out = transfer::apply_transfer(&common::admissible_ledger(&mut rng)).unwrap();
        let scheme = common::random_scheme(&mut rng);
        let geo = geometry::expansion_delta(&out, &scheme).unwrap();
        prop_assert!(geo.is_expanding());
        prop_assert!(rel(geo.area_g_prime - geo.area_g, geo.delta_area) <= 1e-9);
    }
}
