mod support;

use num_rational::Ratio;
use proptest::prelude::*;

use gradsense::analysis::{
    crossing_check, gramian, interior_point_grid, locus_check, positive_definite_test, rank_test,
    scan_locations, LocusRule, ScanLocation, DEFAULT_RANK_TOL,
};
use gradsense::sensing::{
    AnalyticProfile, LocusHints, Rationality, Sensor, SensorGeometry, SensorSuite,
    SpatialDistribution,
};
use gradsense::{build_mode_set, BoundaryRegion, Error, QuadratureSpec, RectDomain, Side};
use support::{simpson, value_oracle};

fn sqrt2_domain() -> RectDomain {
    RectDomain::new(1.0, 2f64.sqrt()).unwrap()
}

fn exact(p: i64, q: i64) -> Rationality {
    Rationality::Exact(Ratio::new(p, q))
}

fn hints(ratios: Vec<Rationality>) -> LocusHints {
    LocusHints {
        ratios,
        symmetric: None,
    }
}

fn top(d: &RectDomain) -> BoundaryRegion {
    BoundaryRegion::whole_side(d, Side::Top)
}

#[test]
fn off_locus_point_is_strategic_on_simple_spectrum() {
    let d = sqrt2_domain();
    let ms = build_mode_set(d, 3, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(3);
    let suite = SensorSuite::new(vec![Sensor::pointwise(&d, [0.23, 0.41]).unwrap()]);
    let v = rank_test(&suite, &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
    assert!(v.strategic);
    assert_eq!(v.per_group.len(), 9);
    assert!(v.per_group.iter().all(|g| g.rank == 1 && g.pass));
    assert!(v.failing_groups.is_empty());
    // Every entry is bounded well away from zero.
    for g in &v.per_group {
        let (n, m) = (g.modes[0].n, g.modes[0].m);
        let o = support::gradient_oracle(&d, n, m, [0.23, 0.41]);
        assert!(((o[0] + o[1]).abs() - g.sigma_min).abs() < 1e-12 * v.sigma_max);
        assert!(g.sigma_min > 1e-3);
    }
}

#[test]
fn center_point_fails_rank_test() {
    let d = sqrt2_domain();
    let ms = build_mode_set(d, 3, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(3);
    let suite = SensorSuite::new(vec![Sensor::pointwise(&d, [0.5, d.a2() / 2.0]).unwrap()]);
    let v = rank_test(&suite, &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
    assert!(!v.strategic);
    let failing: Vec<_> = v.failing_groups.iter().map(|&k| v.per_group[k].modes[0]).collect();
    // The gradient at the center is nonzero only when exactly one of n, m is even.
    for g in &v.per_group {
        let (n, m) = (g.modes[0].n, g.modes[0].m);
        assert_eq!(g.pass, (n % 2 == 0) != (m % 2 == 0), "mode ({n},{m})");
    }
    assert_eq!(failing.len(), 5);
}

#[test]
fn empty_suite_is_rejected() {
    let d = sqrt2_domain();
    let ms = build_mode_set(d, 2, 1e-9).unwrap();
    let r = rank_test(
        &SensorSuite::new(vec![]),
        &ms,
        &top(&d),
        &QuadratureSpec::for_truncation(2),
        DEFAULT_RANK_TOL,
    );
    assert_eq!(r.unwrap_err(), Error::EmptySuite);
}

#[test]
fn multiplicity_requires_as_many_sensors() {
    let d = RectDomain::new(1.0, 1.0).unwrap();
    let ms = build_mode_set(d, 2, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(2);
    let a = Sensor::pointwise(&d, [0.23, 0.37]).unwrap();
    let b = Sensor::pointwise(&d, [0.61, 0.18]).unwrap();
    let one = rank_test(&SensorSuite::new(vec![a.clone()]), &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
    assert!(!one.strategic);
    assert_eq!((one.q, one.r), (1, 2));
    let two = rank_test(&SensorSuite::new(vec![a, b]), &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
    assert!(two.strategic);
}

#[test]
fn gramian_matches_time_quadrature() {
    let d = RectDomain::new(1.0, 1.0).unwrap();
    let ms = build_mode_set(d, 2, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(2);
    let pts = [[0.23, 0.37], [0.61, 0.18]];
    let suite = SensorSuite::new(pts.iter().map(|&p| Sensor::pointwise(&d, p).unwrap()).collect());
    let t_end = 1.0;
    let g = gramian(&suite, &ms, t_end, &q).unwrap();
    let modes = ms.modes();
    let scale = g.matrix.amax();
    for (a, ma) in modes.iter().enumerate() {
        for (b, mb) in modes.iter().enumerate() {
            let cc: f64 = pts
                .iter()
                .map(|&p| {
                    value_oracle(&d, ma.index.n, ma.index.m, p) * value_oracle(&d, mb.index.n, mb.index.m, p)
                })
                .sum();
            let oracle = simpson(0.0, t_end, 10_000, |t| {
                cc * ((ma.eigenvalue + mb.eigenvalue) * t).exp()
            });
            assert!(
                (g.matrix[(a, b)] - oracle).abs() <= 1e-6 * scale,
                "({a},{b}): {} vs {oracle}",
                g.matrix[(a, b)]
            );
        }
    }
    assert_eq!(g.matrix, g.matrix.transpose());
}

#[test]
fn gramian_of_silent_suite_is_zero() {
    let d = sqrt2_domain();
    let ms = build_mode_set(d, 2, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(2);
    let s = Sensor::zone(&d, [0.4, 0.6], [0.1, 0.1], SpatialDistribution::uniform().scaled(0.0)).unwrap();
    let g = gramian(&SensorSuite::new(vec![s]), &ms, 1.0, &q).unwrap();
    assert!(g.matrix.iter().all(|&v| v == 0.0));
    assert_eq!(g.min_eigenvalue(), 0.0);
    assert!(!positive_definite_test(&g, 1e-10));
}

#[test]
fn gramian_conditioning_of_reference_configurations() {
    let d = sqrt2_domain();
    let ms = build_mode_set(d, 3, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(3);
    let good = SensorSuite::new(vec![Sensor::pointwise(&d, [0.23, 0.41]).unwrap()]);
    let g = gramian(&good, &ms, 1.0, &q).unwrap();
    let ratio = g.min_eigenvalue() / g.max_eigenvalue();
    // Positive but far below 1e-10: the 1/(l_a + l_b) factor alone is that
    // badly conditioned.
    assert!(ratio > 1e-14 && ratio < 1e-11, "{ratio:e}");
    assert!(!positive_definite_test(&g, 1e-10));
    assert!(positive_definite_test(&g, 1e-14));

    let center = SensorSuite::new(vec![Sensor::pointwise(&d, [0.5, d.a2() / 2.0]).unwrap()]);
    let c = gramian(&center, &ms, 1.0, &q).unwrap();
    assert!(!positive_definite_test(&c, 1e-14));
    assert!(c.min_eigenvalue().abs() <= 1e-16 * c.max_eigenvalue());
}

#[test]
fn locus_reference_cases() {
    let d = sqrt2_domain();
    let gamma = top(&d);
    let zone = Sensor::zone(&d, [0.5, d.a2() / 2.0], [0.1, 0.1], SpatialDistribution::uniform())
        .unwrap()
        .with_hints(hints(vec![exact(1, 2), exact(1, 2)]));
    let r = locus_check(&zone, &d, &gamma, 5).unwrap();
    assert!(r.non_strategic_by_locus);
    assert_eq!(r.matched_rule, LocusRule::SymmetricZone);

    let seg = BoundaryRegion::new(&d, Side::Top, 1.0 / 3.0 - 0.05, 1.0 / 3.0 + 0.05).unwrap();
    let bz = Sensor::new(
        &d,
        SensorGeometry::BoundaryZone { segments: vec![seg] },
        SpatialDistribution::analytic(AnalyticProfile::CosineBump),
    )
    .unwrap()
    .with_hints(hints(vec![exact(1, 3)]));
    let r = locus_check(&bz, &d, &gamma, 5).unwrap();
    assert!(r.non_strategic_by_locus);
    assert_eq!(r.matched_rule, LocusRule::BoundaryOneSide);
    assert!(r.witness.unwrap().contains("1/3"));

    let p = Sensor::pointwise(&d, [0.5f64.sqrt(), 0.5])
        .unwrap()
        .with_hints(hints(vec![Rationality::Irrational, Rationality::Irrational]));
    let r = locus_check(&p, &d, &gamma, 5).unwrap();
    assert!(r.applicable && !r.non_strategic_by_locus);
}

#[test]
fn scan_single_point_matches_rank_test() {
    let d = sqrt2_domain();
    let ms = build_mode_set(d, 4, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(4);
    let template = Sensor::pointwise(&d, [0.1, 0.1]).unwrap();
    let loc = ScanLocation::Point { x: 0.37, y: 0.81 };
    let recs = scan_locations(&template, &[loc], &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
    let direct = rank_test(
        &SensorSuite::new(vec![Sensor::pointwise(&d, [0.37, 0.81]).unwrap()]),
        &ms,
        &top(&d),
        &q,
        DEFAULT_RANK_TOL,
    )
    .unwrap();
    let out = recs[0].outcome.as_ref().unwrap();
    assert_eq!(out.strategic, direct.strategic);
    assert_eq!(out.sigma_min_overall, direct.sigma_min_overall());
    assert_eq!(out.sigma_max, direct.sigma_max);
}

#[test]
fn scan_isolates_bad_points_and_keeps_order() {
    let d = sqrt2_domain();
    let ms = build_mode_set(d, 3, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(3);
    let template = Sensor::pointwise(&d, [0.1, 0.1]).unwrap();
    let grid = vec![
        ScanLocation::Point { x: 0.2, y: 0.3 },
        ScanLocation::Point { x: 2.0, y: 0.5 },
        ScanLocation::Point { x: 0.5, y: d.a2() / 2.0 },
        ScanLocation::Arc { side: Side::Top, s: 0.3 },
    ];
    let recs = scan_locations(&template, &grid, &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(recs.iter().map(|r| r.location).collect::<Vec<_>>(), grid);
    assert!(recs[0].outcome.as_ref().unwrap().strategic);
    assert!(recs[1].outcome.is_err());
    assert!(!recs[2].outcome.as_ref().unwrap().strategic);
    assert!(recs[3].outcome.is_err());
    assert!(scan_locations(&template, &[], &ms, &top(&d), &q, DEFAULT_RANK_TOL).is_err());
}

/// On a domain with irrational a1^2/a2^2 the centre is the only point of the
/// 21 x 21 interior grid with both ratios of small denominator.
#[test]
fn pointwise_scan_on_simple_spectrum_domain() {
    let d = RectDomain::new(1.0, 2f64.powf(0.25)).unwrap();
    let j = 5;
    let ms = build_mode_set(d, j, 1e-9).unwrap();
    assert!(ms.is_simple_spectrum());
    let q = QuadratureSpec::for_truncation(j);
    let template = Sensor::pointwise(&d, [0.1, 0.1]).unwrap();
    let grid = interior_point_grid(&d, 21, 21);
    let recs = scan_locations(&template, &grid, &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
    let (mut off_total, mut off_good) = (0, 0);
    for (k, rec) in recs.iter().enumerate() {
        let (i, l) = ((k / 21 + 1) as i64, (k % 21 + 1) as i64);
        let out = rec.outcome.as_ref().unwrap();
        let ScanLocation::Point { x, y } = rec.location else { unreachable!() };
        let sensor = Sensor::pointwise(&d, [x, y])
            .unwrap()
            .with_hints(hints(vec![exact(i, 22), exact(l, 22)]));
        let locus = locus_check(&sensor, &d, &top(&d), j).unwrap();
        assert_eq!(locus.non_strategic_by_locus, i == 11 && l == 11, "({i},{l})");
        if locus.non_strategic_by_locus {
            assert!(!out.strategic, "({i},{l})");
        } else {
            off_total += 1;
            if out.strategic && out.sigma_min_overall > 10.0 * DEFAULT_RANK_TOL * out.sigma_max {
                off_good += 1;
            }
        }
    }
    assert_eq!(off_total, 440);
    assert!(off_good as f64 >= 0.95 * off_total as f64, "{off_good}/{off_total}");
}

#[test]
fn crossing_reference_cases() {
    let d = sqrt2_domain();
    let ms = build_mode_set(d, 3, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(3);
    let gamma = top(&d);
    let good = SensorSuite::new(vec![Sensor::pointwise(&d, [0.23, 0.41]).unwrap()]);
    let r = crossing_check(&good, &ms, &gamma, 0.1, &q, DEFAULT_RANK_TOL).unwrap();
    assert!(r.internal_pass && r.boundary_pass && r.implication_holds);
    assert_eq!(r.collar_completeness.rank, 9);

    let center = SensorSuite::new(vec![Sensor::pointwise(&d, [0.5, d.a2() / 2.0]).unwrap()]);
    let r = crossing_check(&center, &ms, &gamma, 0.1, &q, DEFAULT_RANK_TOL).unwrap();
    assert!(!r.internal_pass && !r.boundary_pass && r.implication_holds);

    let err = crossing_check(&good, &ms, &gamma, d.a2(), &q, DEFAULT_RANK_TOL).unwrap_err();
    assert!(matches!(err, Error::RadiusTooLarge { .. }));
}

fn internal_sensor(d: RectDomain) -> impl Strategy<Value = Sensor> {
    let point = (0.05f64..0.95, 0.05f64..0.95)
        .prop_map(move |(u, v)| Sensor::pointwise(&d, [u * d.a1(), v * d.a2()]).unwrap());
    let zone = (0.2f64..0.8, 0.2f64..0.8, 0.02f64..0.15, 0.02f64..0.15).prop_map(move |(u, v, l1, l2)| {
        Sensor::zone(
            &d,
            [u * d.a1(), v * d.a2()],
            [l1 * d.a1(), l2 * d.a2()],
            SpatialDistribution::analytic(AnalyticProfile::CosineBump),
        )
        .unwrap()
    });
    prop_oneof![point, zone]
}

fn config() -> impl Strategy<Value = (RectDomain, u32, Vec<Sensor>)> {
    (0.5f64..2.0, 0.5f64..2.0, 2u32..5).prop_flat_map(|(a1, a2, j)| {
        let d = RectDomain::new(a1, a2).unwrap();
        (
            Just(d),
            Just(j),
            proptest::collection::vec(internal_sensor(d), 1..4),
        )
    })
}

fn margin_ok(v: &gradsense::analysis::StrategicVerdict, factor: f64) -> bool {
    v.per_group
        .iter()
        .all(|g| g.sigma_min < v.threshold / factor || g.sigma_min > v.threshold * factor)
}

fn sensor_strategy_for_rational_locus() -> impl Strategy<Value = (RectDomain, u32, Sensor)> {
    (
        0.5f64..2.0,
        0.5f64..2.0,
        1u32..7,
        (2i64..8, 2i64..8),
        (1i64..8, 1i64..8),
        0usize..3,
    )
        .prop_map(|(a1, a2, j, (q1, q2), (p1, p2), shape)| {
            let d = RectDomain::new(a1, a2).unwrap();
            let (p1, p2) = (p1 % q1 + (p1 % q1 == 0) as i64, p2 % q2 + (p2 % q2 == 0) as i64);
            let r = [exact(p1, q1), exact(p2, q2)];
            let c = [p1 as f64 / q1 as f64 * a1, p2 as f64 / q2 as f64 * a2];
            let sensor = match shape {
                0 => Sensor::pointwise(&d, c).unwrap().with_hints(hints(r.to_vec())),
                1 => {
                    let l = [
                        0.5 * c[0].min(a1 - c[0]).min(0.1 * a1),
                        0.5 * c[1].min(a2 - c[1]).min(0.1 * a2),
                    ];
                    Sensor::zone(&d, c, l, SpatialDistribution::uniform())
                        .unwrap()
                        .with_hints(hints(r.to_vec()))
                }
                _ => {
                    let h = 0.5 * c[0].min(a1 - c[0]).min(0.1 * a1);
                    let seg = BoundaryRegion::new(&d, Side::Top, c[0] - h, c[0] + h).unwrap();
                    Sensor::new(
                        &d,
                        SensorGeometry::BoundaryZone { segments: vec![seg] },
                        SpatialDistribution::analytic(AnalyticProfile::Tent),
                    )
                    .unwrap()
                    .with_hints(hints(vec![r[0]]))
                }
            };
            (d, j, sensor)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn locus_is_sound((d, j, sensor) in sensor_strategy_for_rational_locus()) {
        let report = locus_check(&sensor, &d, &top(&d), j).unwrap();
        prop_assert!(!report.non_strategic_by_locus || report.applicable);
        if report.non_strategic_by_locus {
            let ms = build_mode_set(d, j, 1e-9).unwrap();
            let q = QuadratureSpec::for_truncation(j);
            let v = rank_test(&SensorSuite::new(vec![sensor]), &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
            prop_assert!(!v.strategic, "{:?}", report.witness);
            let wm = report.witness_mode.unwrap();
            let failing = v.failing_groups.iter().any(|&k| v.per_group[k].modes.contains(&wm));
            prop_assert!(failing || v.q < v.r);
        }
    }

    #[test]
    fn scaling_one_sensor_keeps_verdict((d, j, sensors) in config(), k in 0usize..3, alpha in 0.1f64..10.0, neg in any::<bool>()) {
        let ms = build_mode_set(d, j, 1e-9).unwrap();
        let q = QuadratureSpec::for_truncation(j);
        let base = rank_test(&SensorSuite::new(sensors.clone()), &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
        prop_assume!(margin_ok(&base, 1e3));
        let k = k % sensors.len();
        let mut scaled = sensors.clone();
        let alpha = if neg { -alpha } else { alpha };
        scaled[k].distribution = scaled[k].distribution.clone().scaled(alpha);
        let v = rank_test(&SensorSuite::new(scaled), &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(v.strategic, base.strategic);
    }

    #[test]
    fn adding_a_sensor_keeps_strategic((d, j, sensors) in config(), extra in 0.05f64..0.95, extra2 in 0.05f64..0.95) {
        let ms = build_mode_set(d, j, 1e-9).unwrap();
        let q = QuadratureSpec::for_truncation(j);
        let base = rank_test(&SensorSuite::new(sensors.clone()), &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
        prop_assume!(base.strategic);
        let mut more = sensors;
        more.push(Sensor::pointwise(&d, [extra * d.a1(), extra2 * d.a2()]).unwrap());
        let v = rank_test(&SensorSuite::new(more), &ms, &top(&d), &q, DEFAULT_RANK_TOL).unwrap();
        prop_assume!(base.sigma_min_overall() > 10.0 * v.threshold);
        prop_assert!(v.strategic);
        for (a, b) in base.per_group.iter().zip(&v.per_group) {
            prop_assert!(b.sigma_min >= a.sigma_min * (1.0 - 1e-12));
        }
    }

    #[test]
    fn sub_region_keeps_verdict((d, j, sensors) in config(), side_ix in 0usize..4, lo in 0.0f64..0.45, hi in 0.55f64..1.0) {
        let ms = build_mode_set(d, j, 1e-9).unwrap();
        let q = QuadratureSpec::for_truncation(j);
        let side = Side::ALL[side_ix];
        let len = d.side_length(side);
        let whole = BoundaryRegion::whole_side(&d, side);
        let part = BoundaryRegion::new(&d, side, lo * len, hi * len).unwrap();
        let suite = SensorSuite::new(sensors);
        let a = rank_test(&suite, &ms, &whole, &q, DEFAULT_RANK_TOL).unwrap();
        let b = rank_test(&suite, &ms, &part, &q, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(a.strategic, b.strategic);
        prop_assert_eq!(a.per_group, b.per_group);
    }

    #[test]
    fn crossing_implication_holds((d, j, sensors) in config(), side_ix in 0usize..4, lo in 0.0f64..0.45, hi in 0.55f64..1.0) {
        let ms = build_mode_set(d, j, 1e-9).unwrap();
        let q = QuadratureSpec::for_truncation(j);
        let side = Side::ALL[side_ix];
        let len = d.side_length(side);
        let gamma = BoundaryRegion::new(&d, side, lo * len, hi * len).unwrap();
        let r = 0.1 * d.a1().min(d.a2());
        let report = crossing_check(&SensorSuite::new(sensors), &ms, &gamma, r, &q, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(report.implication_holds);
        prop_assert!(report.collar_completeness.dimension == (j * j) as usize);
    }
}
