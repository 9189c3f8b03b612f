//! Property tests for the invariants every module promises.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use fq_core::cache::{decode_points, decode_spectrum, encode_points, encode_spectrum, parse_key_values, render_key_values};
use fq_core::counting::{fit_exponent, histogram, ErrorSeries};
use fq_core::mollifier::smoothed_indicator;
use fq_core::smoothing::err_t_direct;
use fq_core::spectral::{estimate_windowed, Candidate, Spectrum, SpectrumEntry};
use fq_core::trigsys::CATALOG_NAMES;
use fq_core::zeroset::{enumerate_disk, EnumOptions, PointSet, PointSource};
use fq_core::builtin;
use num_complex::Complex64;
use proptest::prelude::*;

fn point_set(raw: &[(f64, f64)], radius: f64) -> PointSet {
    let mut pts: Vec<[f64; 2]> = raw.iter().map(|&(x, y)| [x, y]).filter(|p| p[0].hypot(p[1]) <= radius).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-3);
    if pts.is_empty() {
        pts.push([0.0, 0.0]);
    }
    PointSet::from_points(pts, PointSource { name: "random".into(), radius, grid_step: 0.05 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn catalog_systems_are_real_valued(x in -50.0f64..50.0, y in -50.0f64..50.0) {
        for name in CATALOG_NAMES {
            let sys = builtin(name).unwrap();
            for eq in sys.equations() {
                let z = eq.eval_complex([x, y]);
                prop_assert!(z.im.abs() <= 1e-10 * eq.magnitude_sum(), "{name}: imag {}", z.im);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences(x in -20.0f64..20.0, y in -20.0f64..20.0) {
        let h = 1e-5;
        for name in CATALOG_NAMES {
            let sys = builtin(name).unwrap();
            let g = sys.gradient([x, y]).unwrap();
            for axis in 0..2 {
                let mut a = [x, y];
                let mut b = [x, y];
                a[axis] += h;
                b[axis] -= h;
                let (fa, fb) = (sys.eval_system(a).unwrap(), sys.eval_system(b).unwrap());
                for eq in 0..2 {
                    let fd = (fa[eq] - fb[eq]) / (2.0 * h);
                    let scale = sys.equations()[eq].gradient_bound().max(1.0);
                    prop_assert!((fd - g[eq][axis]).abs() <= 1e-6 * scale, "{name} eq {eq} axis {axis}: {fd} vs {}", g[eq][axis]);
                }
            }
        }
    }

    #[test]
    fn smoothed_indicator_sandwich(r in 1.5f64..100.0, t in 0.01f64..0.49, off in -1.0f64..1.0) {
        let rho = (r + off).max(0.0);
        let v = smoothed_indicator(r, t, rho).unwrap();
        let lo = if rho <= r - t { 1.0 } else { 0.0 };
        let hi = if rho <= r + t { 1.0 } else { 0.0 };
        prop_assert!(lo <= v && v <= hi);
        let w = smoothed_indicator(r, t, rho + 1e-3).unwrap();
        prop_assert!(w <= v + 1e-12);
    }

    #[test]
    fn counting_series_identities(raw in proptest::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 1..300), c0 in 0.1f64..2.0, a in 0.5f64..19.0, b in 0.5f64..19.0) {
        let ps = point_set(&raw, 20.0);
        let s = ErrorSeries::from_point_set(&ps, c0).unwrap();
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(s.count(a).unwrap() <= s.count(b).unwrap());
        prop_assert!((s.err(b).unwrap() - (s.count(b).unwrap() as f64 - c0 * PI * b * b)).abs() < 1e-9 * (1.0 + b * b));
        prop_assert!(s.integral_abs_err(a).unwrap() <= s.integral_abs_err(b).unwrap() + 1e-12);
        prop_assert!(s.max_abs_err(a, b).unwrap() >= s.err(b).unwrap().abs() - 1e-9);
    }

    #[test]
    fn windowed_coefficients_never_exceed_density(raw in proptest::collection::vec((-15.0f64..15.0, -15.0f64..15.0), 5..200), s1 in -3.0f64..3.0, s2 in -3.0f64..3.0) {
        let ps = point_set(&raw, 15.0);
        let cands = [Candidate { s: [0.0, 0.0], k: vec![] }, Candidate { s: [s1, s2], k: vec![] }];
        let e = estimate_windowed(&ps, None, &cands, 15.0).unwrap();
        prop_assert!(e[1].c.norm() <= e[0].c.re * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn point_cache_round_trips(raw in proptest::collection::vec((-30.0f64..30.0, -30.0f64..30.0), 1..200)) {
        let ps = point_set(&raw, 30.0);
        let back = decode_points(&encode_points(&ps)).unwrap();
        prop_assert_eq!(back.points.as_slice(), ps.points());
        prop_assert_eq!(back.separation.to_bits(), ps.separation().to_bits());
    }

    #[test]
    fn spectrum_cache_round_trips(raw in proptest::collection::btree_map((-50i32..50, -50i32..50), (-1.0f64..1.0, -1.0f64..1.0, 0.0f64..0.1), 0..100), c0 in 0.5f64..5.0) {
        let entries: Vec<SpectrumEntry> = raw
            .iter()
            .map(|(&(i, j), &(re, im, se))| SpectrumEntry { s: [i as f64 * 0.25, j as f64 * 0.25], c: Complex64::new(re, im), stderr: se })
            .collect();
        let spec = Spectrum::new(entries, c0, 40.0, Some(3)).unwrap();
        let back = decode_spectrum(&encode_spectrum(&spec)).unwrap();
        prop_assert_eq!(back.entries, spec.entries);
        prop_assert_eq!(back.c0, c0);
        prop_assert_eq!(back.growth_rank, Some(3));
    }

    #[test]
    fn key_values_round_trip(map in proptest::collection::btree_map("[a-z_]{1,12}", "[A-Za-z0-9.,/_-]{0,20}", 0..12)) {
        let map: BTreeMap<String, String> = map;
        prop_assert_eq!(parse_key_values(&render_key_values(&map)).unwrap(), map);
    }

    #[test]
    fn exponent_fit_recovers_power_laws(theta in -2.0f64..3.0, a in 0.01f64..100.0) {
        let xs: Vec<f64> = (0..40).map(|i| 10.0 * 1.1f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * x.powf(theta)).collect();
        let fit = fit_exponent(&xs, &ys, (10.0, 1e4)).unwrap();
        prop_assert!((fit.theta - theta).abs() < 1e-9);
        prop_assert!((fit.prefactor() / a - 1.0).abs() < 1e-8);
    }

    #[test]
    fn histogram_has_unit_mass(values in proptest::collection::vec(-10.0f64..10.0, 1..500), bins in 1usize..50) {
        let h = histogram(&values, bins).unwrap();
        prop_assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(h.edges.len(), bins + 1);
        prop_assert!(h.variance >= 0.0);
    }
}

/// The sandwich on a real enumeration, at many random radii.
#[test]
fn err_t_sandwich_on_fq_main() {
    let ps = enumerate_disk(&builtin("fq-main").unwrap(), 30.0, &EnumOptions::default()).unwrap();
    let c0 = ps.density();
    let s = ErrorSeries::from_point_set(&ps, c0).unwrap();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    runner
        .run(&(2.0f64..29.0, 0.01f64..0.49), |(r, t)| {
            let d = err_t_direct(&ps, c0, r, t).unwrap();
            let area = c0 * PI * r * r;
            prop_assert!(d >= s.count(r - t).unwrap() as f64 - area - 1e-9);
            prop_assert!(d <= s.count(r + t).unwrap() as f64 - area + 1e-9);
            Ok(())
        })
        .unwrap();
}
