mod support;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use gradsense::reconstruct::{error_norms, error_norms_with, reconstruct_gradient, SurrogateNorm};
use gradsense::sensing::{apply_output, Sensor, SensorSuite, SpatialDistribution};
use gradsense::simulate::{
    add_noise, project_initial_state, simulate_outputs, InitialState, OutputRecord, StateCoeffs,
};
use gradsense::{
    boundary_trace_gradient, build_mode_set, BoundaryRegion, Error, ModeIndex, ModeSet,
    QuadratureSpec, RectDomain, Side,
};
use support::{gradient_oracle, simpson, trapezoid, value_oracle, FdHeat};

fn strategic_setup() -> (RectDomain, ModeSet, QuadratureSpec, SensorSuite) {
    let d = RectDomain::new(1.0, 2f64.sqrt()).unwrap();
    let ms = build_mode_set(d, 3, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(3);
    let suite = SensorSuite::new(vec![Sensor::pointwise(&d, [0.23, 0.41]).unwrap()]);
    (d, ms, q, suite)
}

fn mixed_coeffs(ms: &ModeSet) -> StateCoeffs {
    let n = ms.len();
    let values = (0..n)
        .map(|k| (1.0 + k as f64).recip() * if k % 3 == 1 { -1.0 } else { 1.0 })
        .collect();
    StateCoeffs::from_values(ms, values).unwrap()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm
}

#[test]
fn bubble_projection_matches_sine_series() {
    let d = RectDomain::new(1.0, 1.0).unwrap();
    let j = 6;
    let ms = build_mode_set(d, j, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(j);
    let bubble = |p: [f64; 2]| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]);
    let c = project_initial_state(InitialState::Analytic(&bubble), &ms, &q).unwrap();
    for n in 1..=j {
        for m in 1..=j {
            let (nf, mf) = (n as f64, m as f64);
            let oracle = 8.0 * (1.0 - (nf * PI).cos()) * (1.0 - (mf * PI).cos())
                / (nf.powi(3) * mf.powi(3) * PI.powi(6));
            let got = c.get(&ms, ModeIndex::new(n, m)).unwrap();
            assert!((got - oracle).abs() < 1e-8, "({n},{m}): {got} vs {oracle}");
        }
    }
    // Independent check of the leading coefficient by nested Simpson.
    let lead = simpson(0.0, 1.0, 400, |x| {
        simpson(0.0, 1.0, 400, |y| bubble([x, y]) * value_oracle(&d, 1, 1, [x, y]))
    });
    assert_relative_eq!(c.get(&ms, ModeIndex::new(1, 1)).unwrap(), lead, max_relative = 1e-9);
}

#[test]
fn zero_field_projects_to_zero() {
    let (_, ms, q, _) = strategic_setup();
    let c = project_initial_state(InitialState::Analytic(&|_| 0.0), &ms, &q).unwrap();
    assert!(c.values().iter().all(|&v| v == 0.0));
}

#[test]
fn single_mode_outputs_are_exponentials() {
    let (d, ms, q, suite) = strategic_setup();
    let c = StateCoeffs::indicator(&ms, ModeIndex::new(1, 1)).unwrap();
    let rec = simulate_outputs(&suite, &c, &ms, 1.0, 0.01, &q).unwrap();
    assert_eq!(rec.len(), 101);
    let lambda = -(1.0 + 0.5) * PI * PI;
    let phi = value_oracle(&d, 1, 1, [0.23, 0.41]);
    for (t, y) in rec.times.iter().zip(&rec.samples) {
        assert_relative_eq!(y[0], (lambda * t).exp() * phi, max_relative = 1e-13);
    }
    // Monotone envelope for a single mode.
    assert!(rec.samples.windows(2).all(|w| w[1][0].abs() < w[0][0].abs()));
}

#[test]
fn first_sample_is_direct_output() {
    let (_, ms, q, suite) = strategic_setup();
    let c = mixed_coeffs(&ms);
    let rec = simulate_outputs(&suite, &c, &ms, 0.7, 0.05, &q).unwrap();
    assert_eq!(rec.samples[0], apply_output(&suite, &c, &ms, 0.0, &q).unwrap());
    assert_eq!(rec.horizon(), 0.7);
    assert!(matches!(
        simulate_outputs(&suite, &c, &ms, 0.0, 0.01, &q),
        Err(Error::NonPositiveHorizon(_))
    ));
}

/// Finite sums of modes are sampled exactly at grid nodes, so the only
/// discrepancy is the finite-difference eigenvalue and time-step error.
#[test]
fn semigroup_agrees_with_finite_differences() {
    let d = RectDomain::new(1.0, 1.2).unwrap();
    let ms = build_mode_set(d, 4, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(4);
    let nodes = 61;
    let h = [d.a1() / 60.0, d.a2() / 60.0];
    let probes = [(14usize, 25usize), (40, 9), (31, 47)];
    let suite = SensorSuite::new(
        probes
            .iter()
            .map(|&(i, j)| Sensor::pointwise(&d, [i as f64 * h[0], j as f64 * h[1]]).unwrap())
            .collect(),
    );
    let states: [&[((u32, u32), f64)]; 3] = [
        &[((1, 1), 1.0), ((2, 1), 0.5)],
        &[((1, 1), 1.0), ((1, 2), -0.3), ((3, 1), 0.2), ((4, 4), 0.05)],
        &[((2, 2), 0.4), ((1, 3), 0.1), ((1, 1), 0.8), ((3, 2), -0.15)],
    ];
    for terms in states {
        let mut c = vec![0.0; ms.len()];
        for &((n, m), a) in terms {
            c[ms.index_of(ModeIndex::new(n, m)).unwrap()] = a;
        }
        let coeffs = StateCoeffs::from_values(&ms, c).unwrap();
        let init = |p: [f64; 2]| {
            terms
                .iter()
                .map(|&((n, m), a)| a * value_oracle(&d, n, m, p))
                .sum::<f64>()
        };
        let rec = simulate_outputs(&suite, &coeffs, &ms, 1.0, 0.02, &q).unwrap();
        let mut fd = FdHeat::new(&d, nodes, 0.5, init);
        let sup = rec
            .samples
            .iter()
            .flatten()
            .fold(0.0f64, |acc, y| acc.max(y.abs()));
        let mut worst = 0.0f64;
        for (t, y) in rec.times.iter().zip(&rec.samples) {
            fd.advance_to(*t);
            for (k, &(i, j)) in probes.iter().enumerate() {
                worst = worst.max((fd.at(i, j) - y[k]).abs() / sup);
            }
        }
        assert!(worst <= 1e-3, "{terms:?}: {worst:e}");
    }
}

#[test]
fn noise_statistics() {
    let (_, ms, q, suite) = strategic_setup();
    let c = mixed_coeffs(&ms);
    let clean = simulate_outputs(&suite, &c, &ms, 1.0, 1e-4, &q).unwrap();
    assert_eq!(clean.len(), 10_001);
    assert_eq!(add_noise(&clean, 0.0, 5).unwrap().samples, clean.samples);
    let a = add_noise(&clean, 0.01, 42).unwrap();
    let b = add_noise(&clean, 0.01, 42).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, add_noise(&clean, 0.01, 43).unwrap());
    assert_eq!(a.noise_sigma, 0.01);
    let diffs: Vec<f64> = a
        .samples
        .iter()
        .zip(&clean.samples)
        .map(|(x, y)| x[0] - y[0])
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((sd - 0.01).abs() < 0.05 * 0.01, "{sd}");
    assert!(mean.abs() < 4.0 * 0.01 / n.sqrt());
}

#[test]
fn clean_round_trip_recovers_coefficients() {
    let (d, ms, q, suite) = strategic_setup();
    let truth = mixed_coeffs(&ms);
    let gamma = BoundaryRegion::whole_side(&d, Side::Top);
    let rec = simulate_outputs(&suite, &truth, &ms, 1.0, 0.01, &q).unwrap();
    let r = reconstruct_gradient(&rec, &suite, &ms, &gamma, 0.0, &q, Some(&truth)).unwrap();
    assert!(relative_error(r.estimated_coeffs.values(), truth.values()) <= 1e-8);
    assert!(r.err_gamma.unwrap() <= 1e-8);
    assert!(r.err_gamma.unwrap() <= r.err_boundary.unwrap() + 1e-12);
    assert_eq!(r.trace_on_boundary.len(), 4);
    assert!(r.residual < 1e-10);
}

#[test]
fn center_sensor_cannot_be_inverted() {
    let (d, ms, q, _) = strategic_setup();
    let suite = SensorSuite::new(vec![Sensor::pointwise(&d, [0.5, d.a2() / 2.0]).unwrap()]);
    let truth = mixed_coeffs(&ms);
    let gamma = BoundaryRegion::whole_side(&d, Side::Top);
    let rec = simulate_outputs(&suite, &truth, &ms, 1.0, 0.01, &q).unwrap();
    let err = reconstruct_gradient(&rec, &suite, &ms, &gamma, 0.0, &q, Some(&truth)).unwrap_err();
    assert!(matches!(err, Error::SingularSystem { .. }));
    // With regularization the unseen (2,2) component is simply lost.
    let r = reconstruct_gradient(&rec, &suite, &ms, &gamma, 1e-10, &q, Some(&truth)).unwrap();
    let k = ms.index_of(ModeIndex::new(2, 2)).unwrap();
    let t = truth.values()[k];
    assert!((r.estimated_coeffs.values()[k] - t).abs() >= 0.5 * t.abs());
}

#[test]
fn scalar_recovery_and_trace() {
    let d = RectDomain::new(1.0, 2f64.sqrt()).unwrap();
    let ms = build_mode_set(d, 1, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(1);
    let suite = SensorSuite::new(vec![Sensor::pointwise(&d, [0.23, 0.41]).unwrap()]);
    let truth = StateCoeffs::from_values(&ms, vec![1.7]).unwrap();
    let gamma = BoundaryRegion::new(&d, Side::Right, 0.2, 1.1).unwrap();
    let rec = simulate_outputs(&suite, &truth, &ms, 1.0, 0.1, &q).unwrap();
    let r = reconstruct_gradient(&rec, &suite, &ms, &gamma, 0.0, &q, None).unwrap();
    assert_relative_eq!(r.estimated_coeffs.values()[0], 1.7, max_relative = 1e-12);
    let mode = &ms.modes()[0];
    let c = r.estimated_coeffs.values()[0];
    for (s, v) in r.trace_on_gamma.arc.iter().zip(&r.trace_on_gamma.values) {
        let g = boundary_trace_gradient(mode, &d, &gamma, *s).unwrap();
        assert_relative_eq!(v[0], c * g[0], epsilon = 1e-14, max_relative = 1e-12);
        assert_relative_eq!(v[1], c * g[1], epsilon = 1e-14, max_relative = 1e-12);
    }
    assert!(r.err_gamma.is_none());
}

#[test]
fn mismatched_record_is_rejected() {
    let (d, ms, q, suite) = strategic_setup();
    let gamma = BoundaryRegion::whole_side(&d, Side::Top);
    let mut rec = simulate_outputs(&suite, &mixed_coeffs(&ms), &ms, 1.0, 0.1, &q).unwrap();
    rec.samples.pop();
    assert!(matches!(
        reconstruct_gradient(&rec, &suite, &ms, &gamma, 0.0, &q, None),
        Err(Error::HorizonMismatch(_))
    ));
    let wide = OutputRecord {
        times: vec![0.0, 0.5],
        samples: vec![vec![1.0, 2.0], vec![0.5, 1.0]],
        noise_sigma: 0.0,
    };
    assert!(matches!(
        reconstruct_gradient(&wide, &suite, &ms, &gamma, 0.0, &q, None),
        Err(Error::ChannelMismatch { expected: 1, found: 2 })
    ));
}

#[test]
fn error_norm_matches_trapezoid() {
    let d = RectDomain::new(1.3, 0.8).unwrap();
    let ms = build_mode_set(d, 4, 1e-9).unwrap();
    let q = QuadratureSpec::for_truncation(4);
    let zero = StateCoeffs::zeros(&ms);
    let e: Vec<f64> = (0..ms.len()).map(|k| ((k * 7 % 5) as f64 - 2.0) / (1.0 + k as f64)).collect();
    let est = StateCoeffs::from_values(&ms, e.clone()).unwrap();
    let gamma = BoundaryRegion::new(&d, Side::Left, 0.1, 0.65).unwrap();
    let norms = error_norms(&zero, &est, &ms, &gamma, &q).unwrap();
    let modes = ms.modes();
    let energy = |p: [f64; 2]| {
        let mut g = [0.0; 2];
        for (mode, c) in modes.iter().zip(&e) {
            let o = gradient_oracle(&d, mode.index.n, mode.index.m, p);
            g[0] += c * o[0];
            g[1] += c * o[1];
        }
        g[0] * g[0] + g[1] * g[1]
    };
    let steps = 200_000;
    let on_gamma = trapezoid(0.1, 0.65, steps, |s| energy([0.0, s])).sqrt();
    let on_boundary = (trapezoid(0.0, d.a1(), steps, |s| energy([s, 0.0]))
        + trapezoid(0.0, d.a1(), steps, |s| energy([s, d.a2()]))
        + trapezoid(0.0, d.a2(), steps, |s| energy([0.0, s]))
        + trapezoid(0.0, d.a2(), steps, |s| energy([d.a1(), s])))
    .sqrt();
    assert_relative_eq!(norms.err_gamma, on_gamma, max_relative = 1e-6);
    assert_relative_eq!(norms.err_boundary, on_boundary, max_relative = 1e-6);
    assert_eq!(error_norms(&est, &est, &ms, &gamma, &q).unwrap().err_boundary, 0.0);
}

#[test]
fn noise_trend_is_monotone() {
    let (d, ms, q, suite) = strategic_setup();
    let truth = mixed_coeffs(&ms);
    let gamma = BoundaryRegion::whole_side(&d, Side::Top);
    let clean = simulate_outputs(&suite, &truth, &ms, 1.0, 0.01, &q).unwrap();
    let k = clean.len() as f64;
    let medians: Vec<f64> = [0.1, 0.01, 0.001]
        .iter()
        .map(|&sigma| {
            let mut errs: Vec<f64> = (0..10)
                .map(|seed| {
                    let noisy = add_noise(&clean, sigma, seed).unwrap();
                    let r = reconstruct_gradient(&noisy, &suite, &ms, &gamma, sigma * sigma * k, &q, Some(&truth))
                        .unwrap();
                    r.err_gamma.unwrap()
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            0.5 * (errs[4] + errs[5])
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

proptest! {
    #[test]
    fn semigroup_property(
        values in proptest::collection::vec(-1.0f64..1.0, 16),
        t1 in 0.0f64..0.3,
        t2 in 0.0f64..0.3,
    ) {
        let d = RectDomain::new(0.9, 1.7).unwrap();
        let ms = build_mode_set(d, 4, 1e-9).unwrap();
        let c = StateCoeffs::from_values(&ms, values).unwrap();
        let stepped = c.propagate(&ms, t1).unwrap().propagate(&ms, t2).unwrap();
        let direct = c.propagate(&ms, t1 + t2).unwrap();
        for (a, b) in stepped.values().iter().zip(direct.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    /// The centred sensor sees neither the gradient nor the value of mode
    /// (2,2), so that component never reaches the outputs.
    #[test]
    fn kernel_blindness(
        values in proptest::collection::vec(-1.0f64..1.0, 9),
        alpha in -5.0f64..5.0,
        zone in any::<bool>(),
    ) {
        let (d, ms, q, _) = strategic_setup();
        let center = [0.5, d.a2() / 2.0];
        let sensor = if zone {
            Sensor::zone(&d, center, [0.1, 0.2], SpatialDistribution::uniform()).unwrap()
        } else {
            Sensor::pointwise(&d, center).unwrap()
        };
        let suite = SensorSuite::new(vec![sensor]);
        let v = gradsense::analysis::rank_test(
            &suite,
            &ms,
            &BoundaryRegion::whole_side(&d, Side::Top),
            &q,
            gradsense::analysis::DEFAULT_RANK_TOL,
        )
        .unwrap();
        let k22 = ms.index_of(ModeIndex::new(2, 2)).unwrap();
        prop_assert!(v.failing_groups.iter().any(|&g| v.per_group[g].modes == vec![ModeIndex::new(2, 2)]));
        let base = StateCoeffs::from_values(&ms, values.clone()).unwrap();
        let mut shifted = values;
        shifted[k22] += alpha;
        let shifted = StateCoeffs::from_values(&ms, shifted).unwrap();
        let a = simulate_outputs(&suite, &base, &ms, 1.0, 0.05, &q).unwrap();
        let b = simulate_outputs(&suite, &shifted, &ms, 1.0, 0.05, &q).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            prop_assert!((x[0] - y[0]).abs() <= 1e-9);
        }
    }

    #[test]
    fn restriction_inequality(
        e in proptest::collection::vec(-1.0f64..1.0, 9),
        side_ix in 0usize..4,
        lo in 0.0f64..0.9,
        width in 0.05f64..1.0,
        weight in prop_oneof![Just(0.0), 0.0f64..2.0],
    ) {
        let d = RectDomain::new(1.0, 2f64.sqrt()).unwrap();
        let ms = build_mode_set(d, 3, 1e-9).unwrap();
        let q = QuadratureSpec::for_truncation(3);
        let side = Side::ALL[side_ix];
        let len = d.side_length(side);
        let hi = (lo + width).min(1.0);
        let gamma = BoundaryRegion::new(&d, side, lo * len, hi * len).unwrap();
        let zero = StateCoeffs::zeros(&ms);
        let est = StateCoeffs::from_values(&ms, e).unwrap();
        let norm = SurrogateNorm { weight_exponent: weight };
        let n = error_norms_with(&zero, &est, &ms, &[gamma], &q, norm).unwrap();
        prop_assert!(n.err_gamma <= n.err_boundary + 1e-12);
        let all: Vec<_> = Side::ALL.iter().map(|&s| BoundaryRegion::whole_side(&d, s)).collect();
        let full = error_norms_with(&zero, &est, &ms, &all, &q, norm).unwrap();
        prop_assert_eq!(full.err_gamma, full.err_boundary);
        prop_assert!((full.err_boundary - n.err_boundary).abs() <= 1e-12 * full.err_boundary);
    }
}
