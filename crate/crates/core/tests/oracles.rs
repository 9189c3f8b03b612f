//! Independent oracles for values the library computes another way.

use std::f64::consts::PI;

use fq_core::bessel::{j0, j1};
use fq_core::counting::ErrorSeries;
use fq_core::mollifier::{bump, normalization, phi_hat_hankel, smoothed_indicator, MollifierProfile};
use fq_core::spectral::{lower_bound_constant, radial_lines, Spectrum, SpectrumEntry, RADIAL_TOL};
use fq_core::zeroset::{count_in_ball, enumerate_disk, EnumOptions};
use fq_core::{builtin, catalog_entry};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Φ(ρ)` by the midpoint rule on a Cartesian grid of step 1e−3 over the
/// unit square's circumscribed box. The integrand is flat at the disk edge,
/// so the rule converges far faster than its nominal order.
fn phi_grid(rho: f64) -> f64 {
    let h = 1e-3;
    let n = (2.0 / h) as i64;
    let a = normalization();
    let mut total = 0.0;
    for i in 0..n {
        let x = -1.0 + (i as f64 + 0.5) * h;
        let c = (2.0 * PI * rho * x).cos();
        let mut row = 0.0;
        for j in 0..n {
            let y = -1.0 + (j as f64 + 0.5) * h;
            row += bump((x * x + y * y).sqrt());
        }
        total += c * row;
    }
    a * total * h * h
}

#[test]
fn phi_table_matches_cartesian_grid_at_5() {
    let want = phi_grid(5.0);
    let got = MollifierProfile::standard().phi_hat(5.0);
    assert!((got - want).abs() < 1e-6, "table {got} vs grid {want}");
    assert!((phi_hat_hankel(5.0).unwrap() - want).abs() < 1e-6);
}

#[test]
fn phi_table_matches_hankel_quadrature() {
    let m = MollifierProfile::standard();
    for rho in [0.0, 0.37, 1.0, 2.5, 7.77, 19.3, 60.1, 150.0] {
        let a = m.phi_hat(rho);
        let b = phi_hat_hankel(rho).unwrap();
        assert!((a - b).abs() < 1e-10, "ρ={rho}: table {a} vs Hankel {b}");
    }
}

/// Samples `y ~ φ_t` by rejection and counts `|x − y| ≤ r` for `|x| = ρ`.
#[test]
fn smoothed_indicator_matches_monte_carlo() {
    let (r, t, rho) = (10.0, 0.25, 10.0);
    let want = smoothed_indicator(r, t, rho).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let peak = bump(0.0);
    let n = 10_000_000u64;
    let mut hits = 0u64;
    let mut accepted = 0u64;
    while accepted < n {
        let (u, v): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let s = (u * u + v * v).sqrt();
        if s >= 1.0 || rng.random::<f64>() * peak > bump(s) {
            continue;
        }
        accepted += 1;
        let (x, y) = (rho - t * u, -t * v);
        if x * x + y * y <= r * r {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!(want > 0.0 && want < 1.0);
    assert!((p - want).abs() <= 3.0 * se, "quadrature {want} vs Monte Carlo {p} ± {se}");
}

fn lattice_scan(r: f64) -> usize {
    let m = r.floor() as i64;
    let mut n = 0;
    for i in -m..=m {
        n += 1 + 2 * ((r * r - (i * i) as f64).sqrt().floor() as usize);
    }
    n
}

#[test]
fn lattice_counts_match_integer_scan() {
    let ps = enumerate_disk(&builtin("lattice").unwrap(), 100.0, &EnumOptions::default()).unwrap();
    for r in [0.5, 1.0, 5.0, 10.0, 33.3, 100.0] {
        assert_eq!(count_in_ball(&ps, r).unwrap(), lattice_scan(r), "r={r}");
    }
    assert_eq!(count_in_ball(&ps, 100.0).unwrap(), 31417);
}

#[test]
fn shifted_lattice_counts_match_scan() {
    let e = catalog_entry("shifted-lattice").unwrap();
    let ps = enumerate_disk(&e.system, 30.0, &EnumOptions::default()).unwrap();
    let alpha = fq_core::trigsys::default_shift();
    for r in [3.0, 12.5, 30.0] {
        let mut n = 0;
        for i in -40i64..=40 {
            for j in -40i64..=40 {
                let (x, y) = (i as f64 + alpha[0], j as f64 + alpha[1]);
                if x * x + y * y <= r * r {
                    n += 1;
                }
            }
        }
        assert_eq!(count_in_ball(&ps, r).unwrap(), n, "r={r}");
    }
}

/// Riemann sums of `|Err|` and `Ern²` on a fine grid.
#[test]
fn piecewise_integrals_match_riemann_sums() {
    let ps = enumerate_disk(&builtin("lattice").unwrap(), 40.0, &EnumOptions::default()).unwrap();
    let s = ErrorSeries::from_point_set(&ps, 1.0).unwrap();
    let big_r = 37.3;
    let n = 2_000_000;
    let h = big_r / n as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for i in 0..n {
        let r = (i as f64 + 0.5) * h;
        abs += s.err(r).unwrap().abs() * h;
        if r >= 1.0 {
            sq += s.ern(r).unwrap().powi(2) * h;
        }
    }
    let a = s.integral_abs_err(big_r).unwrap();
    let b = s.integral_sq_ern(big_r).unwrap();
    assert!((a - abs).abs() < 1e-3 * a, "{a} vs {abs}");
    assert!((b - sq).abs() < 1e-3 * b, "{b} vs {sq}");
}

#[test]
fn lower_bound_hand_sum() {
    // ℤ² with c_s = 1 for all s up to γ = √5
    let mut entries = Vec::new();
    for i in -3i64..=3 {
        for j in -3i64..=3 {
            if i * i + j * j <= 5 {
                entries.push(SpectrumEntry { s: [i as f64, j as f64], c: Complex64::new(1.0, 0.0), stderr: 0.0 });
            }
        }
    }
    let spec = Spectrum::new(entries, 1.0, 100.0, Some(2)).unwrap();
    let lines = radial_lines(&spec, RADIAL_TOL);
    let hand = (16.0 + 16.0 / 2f64.powf(1.5) + 2.0 + 64.0 / 5f64.powf(1.5)) / (2.0 * PI * PI);
    let got = lower_bound_constant(&lines, 5f64.sqrt() + 1e-9).value;
    assert!((got - hand).abs() < 1e-12);
    assert!((got - 1.4884).abs() < 1e-4);
}

/// Bessel functions against their integral representations
/// `J_n(x) = (1/π)∫₀^π cos(nθ − x sin θ) dθ`, summed by the trapezoid rule,
/// which is spectrally accurate for periodic integrands.
#[test]
fn bessel_matches_integral_representation() {
    let k = 4000;
    let rep = |n: f64, x: f64| {
        let h = PI / k as f64;
        let mut s = 0.5 * ((0.0f64).cos() + (n * PI).cos());
        for i in 1..k {
            let th = i as f64 * h;
            s += (n * th - x * th.sin()).cos();
        }
        s * h / PI
    };
    for x in [0.1, 1.0, 3.8317, 7.9, 8.1, 12.0, 25.0, 60.0, 300.0] {
        assert!((j0(x) - rep(0.0, x)).abs() < 1e-12, "J0({x})");
        assert!((j1(x) - rep(1.0, x)).abs() < 1e-12, "J1({x})");
    }
}
