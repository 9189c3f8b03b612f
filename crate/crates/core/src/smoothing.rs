//! The smoothed error term `Err_t(r) = Σ_λ (1_{B_r} * φ_t)(λ) − c₀πr²`,
//! evaluated directly from the points and spectrally from the radial lines,
//! its leading Bessel term and the Besicovitch coefficients of `Ern`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::{j1, J1_SQRT_BOUND};
use crate::counting::ErrorSeries;
use crate::error::{FqError, Result};
use crate::mollifier::{smoothed_indicator, MollifierProfile};
use crate::numeric::{gl16, integrate_adaptive};
use crate::spectral::{truncation_tail_bound, Growth, RadialLine};
use crate::trigsys::cis_turns;
use crate::zeroset::PointSet;

/// Relative size of the imaginary part tolerated in sums that are real in
/// exact arithmetic.
pub const IMAG_RESIDUE_REL: f64 = 1e-8;

/// Where and how spectral sums are cut: lines with `γ ≤ gamma_cut` are
/// summed, the rest is bounded from `growth`, and bounds above `tol` fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub gamma_cut: f64,
    pub growth: Growth,
    pub tol: f64,
}

/// A truncated spectral sum with a certified bound on what was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certified<T> {
    pub value: T,
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothedErrorSample {
    pub r: f64,
    pub t: f64,
    pub direct: f64,
    pub spectral: f64,
    pub leading: f64,
    pub remainder: f64,
    /// Certified truncation bound of `spectral`.
    pub tail: f64,
}

fn check_rt(r: f64, t: f64) -> Result<()> {
    if !(r > 1.0 && r.is_finite()) || !(t > 0.0 && t < 0.5) {
        return Err(FqError::Domain(format!("need r > 1 and t ∈ (0, 1/2), got r={r}, t={t}")));
    }
    Ok(())
}

/// `Σ_λ (1_{B_r} * φ_t)(λ) − c₀πr²`. Points inside `B_{r−t}` contribute 1
/// exactly; only the annulus needs quadrature.
pub fn err_t_direct(ps: &PointSet, c0: f64, r: f64, t: f64) -> Result<f64> {
    check_rt(r, t)?;
    if r + t > ps.radius() * (1.0 + 1e-12) {
        return Err(FqError::OutOfRange { what: "r + t", value: r + t, limit: ps.radius() });
    }
    let radii = ps.radii_sorted();
    let inner = radii.partition_point(|&x| x <= r - t);
    let outer = radii.partition_point(|&x| x < r + t);
    let mut band = 0.0;
    for &rho in &radii[inner..outer] {
        band += smoothed_indicator(r, t, rho)?;
    }
    Ok(inner as f64 + band - c0 * PI * r * r)
}

fn check_lines(lines: &[RadialLine], cut: &Truncation) -> Result<()> {
    if !(cut.gamma_cut > 0.0) || !(cut.tol > 0.0) {
        return Err(FqError::Domain("gamma_cut and tol must be positive".into()));
    }
    if lines.iter().any(|l| !(l.gamma > 0.0)) {
        return Err(FqError::DegenerateInput("radial line at γ ≤ 0".into()));
    }
    Ok(())
}

fn certify(tail: f64, cut: &Truncation) -> Result<f64> {
    if tail > cut.tol {
        Err(FqError::Truncation { tail, tol: cut.tol })
    } else {
        Ok(tail)
    }
}

/// Real part of a sum whose terms pair up into conjugates.
fn real_part(z: Complex64, magnitude: f64) -> Result<f64> {
    if z.im.abs() > IMAG_RESIDUE_REL * magnitude.max(f64::MIN_POSITIVE) {
        return Err(FqError::DegenerateInput(format!(
            "imaginary residue {:e} of a real sum (magnitude {magnitude:e}); the line sums are not conjugate-symmetric",
            z.im
        )));
    }
    Ok(z.re)
}

/// `Σ_{γ≤Γ} ℓ(γ)Φ(tγ)·r·J₁(2πrγ)/γ`, the Fourier side of `Err_t(r)`.
///
/// The tail uses `|J₁(x)| ≤ K/√x`, giving
/// `K√(r/2π)·Σ_{‖s‖>Γ}|c_s Φ(t‖s‖)|/‖s‖^{3/2}`.
pub fn err_t_spectral(lines: &[RadialLine], r: f64, t: f64, m: &MollifierProfile, cut: &Truncation) -> Result<Certified<f64>> {
    check_rt(r, t)?;
    check_lines(lines, cut)?;
    let (mut sum, mut mag) = (Complex64::new(0.0, 0.0), 0.0);
    for l in lines.iter().filter(|l| l.gamma <= cut.gamma_cut) {
        let term = l.ell * (m.phi_hat(t * l.gamma) * r * j1(2.0 * PI * r * l.gamma) / l.gamma);
        sum += term;
        mag += term.norm();
    }
    let tail = J1_SQRT_BOUND * (r / (2.0 * PI)).sqrt() * truncation_tail_bound(cut.growth, 1.5, t, cut.gamma_cut, m)?;
    Ok(Certified { value: real_part(sum, mag)?, tail: certify(tail, cut)? })
}

/// `X_{t,τ}(r) = Σ_{γ≤Γ} ℓ(γ)Φ(tγ)e^{2πiτrγ}/γ^{3/2}`.
pub fn x_t_tau(lines: &[RadialLine], t: f64, tau: i32, r: f64, m: &MollifierProfile, cut: &Truncation) -> Result<Certified<Complex64>> {
    if tau != 1 && tau != -1 {
        return Err(FqError::Domain(format!("τ must be ±1, got {tau}")));
    }
    check_rt(r, t)?;
    check_lines(lines, cut)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for l in lines.iter().filter(|l| l.gamma <= cut.gamma_cut) {
        sum += l.ell * cis_turns(tau as f64 * r * l.gamma) * (m.phi_hat(t * l.gamma) / l.gamma.powf(1.5));
    }
    let tail = truncation_tail_bound(cut.growth, 1.5, t, cut.gamma_cut, m)?;
    Ok(Certified { value: sum, tail: certify(tail, cut)? })
}

/// `a_τ = e^{−3πτi/4}/(2π)`.
pub fn a_tau(tau: i32) -> Complex64 {
    Complex64::from_polar(1.0 / (2.0 * PI), -0.75 * PI * tau as f64)
}

/// `r^{1/2}·Σ_τ a_τ X_{t,τ}(r)`: `Err_t` with `J₁` replaced by its leading
/// Hankel term.
pub fn leading_term(lines: &[RadialLine], t: f64, r: f64, m: &MollifierProfile, cut: &Truncation) -> Result<Certified<f64>> {
    let plus = x_t_tau(lines, t, 1, r, m, cut)?;
    let minus = x_t_tau(lines, t, -1, r, m, cut)?;
    let z = (a_tau(1) * plus.value + a_tau(-1) * minus.value) * r.sqrt();
    let mag = r.sqrt() / (2.0 * PI) * (plus.value.norm() + minus.value.norm());
    let tail = r.sqrt() / PI * plus.tail;
    Ok(Certified { value: real_part(z, mag)?, tail: certify(tail, cut)? })
}

/// One full sample: both evaluations of `Err_t`, the leading term and the
/// remainder `B(r, t) = direct − leading`.
pub fn sample(
    ps: &PointSet,
    c0: f64,
    lines: &[RadialLine],
    r: f64,
    t: f64,
    m: &MollifierProfile,
    cut: &Truncation,
) -> Result<SmoothedErrorSample> {
    let direct = err_t_direct(ps, c0, r, t)?;
    let spectral = err_t_spectral(lines, r, t, m, cut)?;
    let leading = leading_term(lines, t, r, m, cut)?;
    Ok(SmoothedErrorSample {
        r,
        t,
        direct,
        spectral: spectral.value,
        leading: leading.value,
        remainder: direct - leading.value,
        tail: spectral.tail,
    })
}

/// Default Besicovitch window `exp(4 − 1/(x(1−x)))` on `(0, 1)`; peak 1 at ½.
#[inline]
pub fn besicovitch_window(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        (4.0 - 1.0 / (x * (1.0 - x))).exp()
    }
}

/// `∫₀¹ ρ`.
pub fn window_mass() -> f64 {
    integrate_adaptive(besicovitch_window, 0.0, 1.0, 8, 1 << 12, 1e-15).expect("smooth integrand")
}

/// Below this fraction of `R` the window is under `e^{−700}`.
const WINDOW_EDGE: f64 = 1.43e-3;
const PIECES_PER_TASK: usize = 4096;

/// `I(R, ξ) = (1/R)∫₀^R ρ(r/R)·Ern(r)·e^{−2πiξr} dr`, integrated with 16
/// Gauss nodes on every inter-jump piece (subdivided where the phase turns
/// more than about half a cycle).
pub fn besicovitch_coefficient(series: &ErrorSeries, xi: f64, big_r: f64) -> Result<Complex64> {
    if !(big_r > 1.0) || !xi.is_finite() {
        return Err(FqError::Domain(format!("need R > 1 and finite ξ, got R={big_r}, ξ={xi}")));
    }
    if big_r > series.r_max() * (1.0 + 1e-12) {
        return Err(FqError::OutOfRange { what: "R", value: big_r, limit: series.r_max() });
    }
    let (lo, hi) = (WINDOW_EDGE * big_r, (1.0 - WINDOW_EDGE) * big_r);
    let jumps = series.jump_radii();
    let counts = series.counts_after_jump();
    // piece boundaries clipped to [lo, hi] with the count on each
    let first = jumps.partition_point(|&x| x <= lo);
    let mut bounds = vec![(lo, if first == 0 { 0 } else { counts[first - 1] })];
    for i in first..jumps.len() {
        if jumps[i] >= hi {
            break;
        }
        bounds.push((jumps[i], counts[i]));
    }
    bounds.push((hi, 0));
    let c0 = series.c0();
    let (nodes, weights) = gl16();
    let piece = |a: f64, b: f64, k: f64| -> Complex64 {
        let panels = ((b - a) * (2.0 * xi.abs() + 1.0)).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let (pa, pb) = (a + p as f64 * h, a + (p + 1) as f64 * h);
            let (mid, half) = (0.5 * (pa + pb), 0.5 * (pb - pa));
            for (x, w) in nodes.iter().zip(weights) {
                let r = mid + half * x;
                let ern = (k - c0 * PI * r * r) / r.sqrt();
                acc += cis_turns(-xi * r) * (w * half * besicovitch_window(r / big_r) * ern);
            }
        }
        acc
    };
    let n = bounds.len() - 1;
    let partials: Vec<Complex64> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(PIECES_PER_TASK)
        .map(|idx| {
            idx.iter()
                .map(|&i| piece(bounds[i].0, bounds[i + 1].0, bounds[i].1 as f64))
                .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
        })
        .collect();
    let total = partials.into_iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    Ok(total / big_r)
}

/// Predicted limit `ρ̂(0)·a_{sgn ξ}·ℓ(|ξ|)/|ξ|^{3/2}`, zero at `ξ = 0` and off
/// the radial spectrum. `ℓ` at `−|ξ|` is the conjugate line sum.
pub fn besicovitch_limit(lines: &[RadialLine], xi: f64, tol: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let g = xi.abs();
    let ell = lines
        .iter()
        .find(|l| (l.gamma - g).abs() <= tol * g)
        .map_or(Complex64::new(0.0, 0.0), |l| l.ell);
    let ell = if xi > 0.0 { ell } else { ell.conj() };
    ell * a_tau(xi.signum() as i32) * (window_mass() / g.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::MollifierProfile;
    use crate::trigsys::builtin;
    use crate::zeroset::{enumerate_disk, EnumOptions};

    fn lattice_lines(gamma: f64) -> Vec<RadialLine> {
        let m = gamma.floor() as i64;
        let mut by_n = std::collections::BTreeMap::<i64, f64>::new();
        for i in -m..=m {
            for j in -m..=m {
                let n = i * i + j * j;
                if n > 0 && (n as f64).sqrt() <= gamma {
                    *by_n.entry(n).or_default() += 1.0;
                }
            }
        }
        by_n
            .into_iter()
            .map(|(n, c)| RadialLine { gamma: (n as f64).sqrt(), ell: Complex64::new(c, 0.0), members: vec![] })
            .collect()
    }

    #[test]
    fn a_tau_closed_form() {
        let p = a_tau(1) * a_tau(-1);
        assert!((p.re - 1.0 / (4.0 * PI * PI)).abs() < 1e-15 && p.im.abs() < 1e-15);
        assert!((a_tau(1) - a_tau(-1).conj()).norm() < 1e-16);
    }

    #[test]
    fn lattice_spectral_matches_direct() {
        let m = MollifierProfile::standard();
        let ps = enumerate_disk(&builtin("lattice").unwrap(), 25.0, &EnumOptions::default()).unwrap();
        let cut = Truncation { gamma_cut: 80.0, growth: Growth { b: 4.0, p: 2.0 }, tol: 1e-3 };
        let lines = lattice_lines(cut.gamma_cut);
        let d = err_t_direct(&ps, 1.0, 20.0, 0.2).unwrap();
        let s = err_t_spectral(&lines, 20.0, 0.2, m, &cut).unwrap();
        assert!((d - s.value).abs() < 1e-2, "direct {d} spectral {} tail {}", s.value, s.tail);
    }

    #[test]
    fn sandwich_on_lattice() {
        let ps = enumerate_disk(&builtin("lattice").unwrap(), 30.0, &EnumOptions::default()).unwrap();
        let series = ErrorSeries::from_point_set(&ps, 1.0).unwrap();
        for k in 0..40 {
            let r = 2.0 + 0.61 * k as f64;
            let t = 0.05 + 0.01 * (k % 40) as f64;
            let d = err_t_direct(&ps, 1.0, r, t).unwrap();
            let lo = series.count(r - t).unwrap() as f64 - PI * r * r;
            let hi = series.count(r + t).unwrap() as f64 - PI * r * r;
            assert!(lo - 1e-9 <= d && d <= hi + 1e-9);
        }
    }

    #[test]
    fn single_line_small_t() {
        let m = MollifierProfile::standard();
        let lines = vec![RadialLine { gamma: 1.0, ell: Complex64::new(4.0, 0.0), members: vec![] }];
        let cut = Truncation { gamma_cut: 1.0, growth: Growth { b: 1e-300, p: 2.0 }, tol: 1.0 };
        let x = x_t_tau(&lines, 1e-9, 1, 3.3, m, &cut).unwrap();
        assert!((x.value - cis_turns(3.3) * 4.0).norm() < 1e-9);
    }
}
