//! The counting error `Err(r) = #(Λ∩B_r) − c₀πr²` as an exact step function,
//! with closed-form piecewise integrals, exponent fits and histograms.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{FqError, Result};
use crate::numeric::{fit_line, pairwise_sum};
use crate::zeroset::{PointSet, BOUNDARY_TOL};

/// Radii closer than this (relative) are one jump.
pub const JUMP_MERGE_REL: f64 = 1e-12;

/// Piecewise-constant counting function with its closed-form integrals.
///
/// Piece `i` is `[jump_radii[i], jump_radii[i+1])` with count
/// `counts_after_jump[i]`; before the first jump the count is zero.
#[derive(Debug, Clone)]
pub struct ErrorSeries {
    jump_radii: Vec<f64>,
    counts_after_jump: Vec<u64>,
    c0: f64,
    r_max: f64,
    /// `∫₀^{jump_radii[i]} |Err|`
    abs_prefix: Vec<f64>,
    /// `∫₁^{max(1, jump_radii[i])} Err²/r`
    sq_prefix: Vec<f64>,
}

/// `∫_a^b |k − cπr²| dr` on a piece of constant count `k`.
fn piece_abs(k: f64, c0: f64, a: f64, b: f64) -> f64 {
    // (b − a)(k − cπ(a² + ab + b²)/3) avoids the cancellation of kr − cπr³/3
    let signed = |a: f64, b: f64| (b - a) * (k - c0 * PI * (a * a + a * b + b * b) / 3.0);
    if b <= a {
        return 0.0;
    }
    if c0 <= 0.0 {
        return (k * (b - a)).abs();
    }
    let rstar = (k / (c0 * PI)).sqrt();
    if rstar > a && rstar < b {
        signed(a, rstar).abs() + signed(rstar, b).abs()
    } else {
        signed(a, b).abs()
    }
}

/// `h(x) = x − ln(1+x) − x²/2`, accurate for small `x`.
fn log_tail(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let mut term = -x * x * x / 3.0;
        let mut sum = term;
        let mut n = 3.0;
        loop {
            term *= -x * n / (n + 1.0);
            n += 1.0;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x - x.ln_1p() - 0.5 * x * x
    }
}

/// `∫_a^b (k − cπr²)²/r dr` for `0 < a ≤ b`.
///
/// With `u = r²`, `A = k − cπa²`, `Δ = b² − a²`, `x = Δ/a²`, the integral is
/// `½[A²x − (AΔ²/2a²)(cπ + k/a²) − k²h(x)]`, which has no cancellation
/// between the large terms of `k² ln r − kcπr² + c²π²r⁴/4`.
fn piece_sq(k: f64, c0: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let ua = a * a;
    let big_a = k - c0 * PI * ua;
    let delta = (b - a) * (b + a);
    let x = delta / ua;
    0.5 * (big_a * big_a * x - big_a * delta * delta / (2.0 * ua) * (c0 * PI + k / ua) - k * k * log_tail(x))
}

impl ErrorSeries {
    /// Builds the series from a point set enumerated to `ps.radius()`.
    pub fn from_point_set(ps: &PointSet, c0: f64) -> Result<Self> {
        Self::from_sorted_radii(ps.radii_sorted(), c0, ps.radius())
    }

    pub fn from_sorted_radii(radii: &[f64], c0: f64, r_max: f64) -> Result<Self> {
        if !(c0 >= 0.0 && c0.is_finite()) || !(r_max > 0.0) {
            return Err(FqError::Domain(format!("need c0 ≥ 0 and r_max > 0, got c0={c0}, r_max={r_max}")));
        }
        let mut jump_radii: Vec<f64> = Vec::new();
        let mut counts_after_jump: Vec<u64> = Vec::new();
        let mut n = 0u64;
        for &r in radii {
            if r > r_max + BOUNDARY_TOL {
                break;
            }
            n += 1;
            match jump_radii.last() {
                Some(&last) if r - last <= JUMP_MERGE_REL * r.max(1.0) => {
                    *counts_after_jump.last_mut().expect("parallel") = n;
                }
                _ => {
                    jump_radii.push(r);
                    counts_after_jump.push(n);
                }
            }
        }
        let pieces = jump_radii.len();
        let bound = |i: usize| if i + 1 < pieces { jump_radii[i + 1].min(r_max) } else { r_max };
        let abs_piece: Vec<f64> = (0..pieces)
            .into_par_iter()
            .map(|i| piece_abs(counts_after_jump[i] as f64, c0, jump_radii[i].min(r_max), bound(i)))
            .collect();
        let sq_piece: Vec<f64> = (0..pieces)
            .into_par_iter()
            .map(|i| {
                let a = jump_radii[i].max(1.0);
                piece_sq(counts_after_jump[i] as f64, c0, a.min(r_max), bound(i).max(a.min(r_max)))
            })
            .collect();
        let first = jump_radii.first().copied().unwrap_or(r_max).min(r_max);
        let mut abs_prefix = Vec::with_capacity(pieces);
        let mut sq_prefix = Vec::with_capacity(pieces);
        // before the first jump the count is 0
        let mut acc_abs = piece_abs(0.0, c0, 0.0, first);
        let mut acc_sq = if first > 1.0 { piece_sq(0.0, c0, 1.0, first) } else { 0.0 };
        for i in 0..pieces {
            abs_prefix.push(acc_abs);
            sq_prefix.push(acc_sq);
            acc_abs += abs_piece[i];
            acc_sq += sq_piece[i];
        }
        Ok(Self { jump_radii, counts_after_jump, c0, r_max, abs_prefix, sq_prefix })
    }

    pub fn jump_radii(&self) -> &[f64] {
        &self.jump_radii
    }

    pub fn counts_after_jump(&self) -> &[u64] {
        &self.counts_after_jump
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    fn check(&self, r: f64) -> Result<()> {
        if r.is_nan() || r < 0.0 {
            return Err(FqError::Domain(format!("radius must be ≥ 0, got {r}")));
        }
        if r > self.r_max * (1.0 + 1e-12) {
            return Err(FqError::OutOfRange { what: "radius", value: r, limit: self.r_max });
        }
        Ok(())
    }

    /// Index of the last jump at or below `r`.
    fn piece(&self, r: f64) -> Option<usize> {
        self.jump_radii.partition_point(|&x| x <= r + BOUNDARY_TOL).checked_sub(1)
    }

    /// `#(Λ ∩ B_r)`, closed ball.
    pub fn count(&self, r: f64) -> Result<u64> {
        self.check(r)?;
        Ok(self.piece(r).map_or(0, |i| self.counts_after_jump[i]))
    }

    pub fn err(&self, r: f64) -> Result<f64> {
        Ok(self.count(r)? as f64 - self.c0 * PI * r * r)
    }

    pub fn ern(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(FqError::Domain(format!("Ern needs r > 0, got {r}")));
        }
        Ok(self.err(r)? / r.sqrt())
    }

    /// `∫₀^R |Err(r)| dr`, exact piecewise.
    pub fn integral_abs_err(&self, big_r: f64) -> Result<f64> {
        self.check(big_r)?;
        let i = self.jump_radii.partition_point(|&x| x <= big_r);
        Ok(match i.checked_sub(1) {
            None => piece_abs(0.0, self.c0, 0.0, big_r),
            Some(j) => self.abs_prefix[j] + piece_abs(self.counts_after_jump[j] as f64, self.c0, self.jump_radii[j], big_r),
        })
    }

    /// `∫₁^R |Err(r)| dr`.
    pub fn integral_abs_err_from_one(&self, big_r: f64) -> Result<f64> {
        if big_r < 1.0 {
            return Err(FqError::Domain(format!("need R ≥ 1, got {big_r}")));
        }
        Ok(self.integral_abs_err(big_r)? - self.integral_abs_err(1.0_f64.min(self.r_max))?)
    }

    /// `∫₁^R Err(r)²/r dr = ∫₁^R |Ern|²`, exact piecewise.
    pub fn integral_sq_ern(&self, big_r: f64) -> Result<f64> {
        self.check(big_r)?;
        if big_r < 1.0 {
            return Err(FqError::Domain(format!("need R ≥ 1, got {big_r}")));
        }
        let i = self.jump_radii.partition_point(|&x| x <= big_r);
        Ok(match i.checked_sub(1) {
            None => piece_sq(0.0, self.c0, 1.0, big_r),
            Some(j) => {
                let a = self.jump_radii[j].max(1.0);
                self.sq_prefix[j] + piece_sq(self.counts_after_jump[j] as f64, self.c0, a, big_r.max(a))
            }
        })
    }

    /// Maximum of `|Err|` over `[lo, hi]`. `|Err|` is monotone within a piece,
    /// so only piece endpoints (one-sided limits) matter.
    pub fn max_abs_err(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check(hi)?;
        if !(lo <= hi) || lo < 0.0 {
            return Err(FqError::Domain(format!("bad interval [{lo}, {hi}]")));
        }
        let e = |k: u64, r: f64| (k as f64 - self.c0 * PI * r * r).abs();
        let start = self.piece(lo);
        let mut k = start.map_or(0, |i| self.counts_after_jump[i]);
        let mut best = e(k, lo);
        let mut j = start.map_or(0, |i| i + 1);
        while j < self.jump_radii.len() && self.jump_radii[j] <= hi {
            let r = self.jump_radii[j];
            best = best.max(e(k, r)); // left limit
            k = self.counts_after_jump[j];
            best = best.max(e(k, r));
            j += 1;
        }
        Ok(best.max(e(k, hi)))
    }

    /// Upper envelope of `|Err|` over geometric windows `[lo·q^j, lo·q^{j+1}]`.
    /// Returns `(window right end, window max)` pairs.
    pub fn envelope(&self, lo: f64, hi: f64, ratio: f64) -> Result<Vec<(f64, f64)>> {
        if !(ratio > 1.0) || !(lo > 0.0) {
            return Err(FqError::Domain("envelope needs lo > 0 and ratio > 1".into()));
        }
        let mut out = Vec::new();
        let mut a = lo;
        while a < hi * (1.0 - 1e-12) {
            let b = (a * ratio).min(hi);
            out.push((b, self.max_abs_err(a, b)?));
            a = b;
        }
        Ok(out)
    }
}

/// Result of a log-log least-squares fit `y ≈ e^{log_prefactor}·x^θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub theta: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub theta_stderr: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

impl ExponentFit {
    pub fn prefactor(&self) -> f64 {
        self.log_prefactor.exp()
    }
}

pub const MIN_FIT_SAMPLES: usize = 8;

pub fn fit_exponent(xs: &[f64], ys: &[f64], window: (f64, f64)) -> Result<ExponentFit> {
    if xs.len() != ys.len() {
        return Err(FqError::Domain("xs and ys differ in length".into()));
    }
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&x, &y) in xs.iter().zip(ys) {
        if x < window.0 || x > window.1 {
            continue;
        }
        if !(y > 0.0) || !(x > 0.0) {
            return Err(FqError::Domain(format!("log fit needs positive samples, got ({x}, {y})")));
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    if lx.len() < MIN_FIT_SAMPLES {
        return Err(FqError::InsufficientData { needed: MIN_FIT_SAMPLES, got: lx.len() });
    }
    let fit = fit_line(&lx, &ly);
    Ok(ExponentFit {
        theta: fit.slope,
        log_prefactor: fit.intercept,
        r_squared: fit.r_squared,
        theta_stderr: fit.slope_stderr,
        window,
        samples: lx.len(),
    })
}

/// Normalised histogram with sample moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub samples: usize,
}

pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(FqError::DegenerateInput("histogram of no samples".into()));
    }
    if bins == 0 {
        return Err(FqError::Domain("bins must be positive".into()));
    }
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let variance = pairwise_sum(&dev) / n;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let masses = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(Histogram { edges, masses, mean, variance, samples: values.len() })
}

/// Histogram of `Ern` sampled on `r_grid`.
pub fn histogram_ern(series: &ErrorSeries, r_grid: &[f64], bins: usize) -> Result<Histogram> {
    if r_grid.is_empty() {
        return Err(FqError::DegenerateInput("empty radius grid".into()));
    }
    let values = r_grid.iter().map(|&r| series.ern(r)).collect::<Result<Vec<f64>>>()?;
    histogram(&values, bins)
}

/// `#((X × Y) ∩ B_r)` for every radius of an ascending grid, where `xs`, `ys`
/// are the sorted 1-D zero sets of a product system. Each column's
/// admissible `y` range only grows with `r`, so two pointers per column
/// sweep the grid in `O(|X|·|grid| + count)`.
pub fn product_counts(xs: &[f64], ys: &[f64], radii: &[f64]) -> Result<Vec<u64>> {
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(FqError::Domain("radius grid must be ascending".into()));
    }
    let zero = ys.partition_point(|&y| y < 0.0);
    // per column: (lower pointer into ys, moving down; upper pointer, moving up)
    let mut lo = vec![zero; xs.len()];
    let mut hi = vec![zero; xs.len()];
    let mut out = Vec::with_capacity(radii.len());
    let mut total = 0u64;
    for &r in radii {
        let rr = r + BOUNDARY_TOL;
        let r2 = rr * rr;
        let first = xs.partition_point(|&x| x < -rr);
        let last = xs.partition_point(|&x| x <= rr);
        for c in first..last {
            let room = r2 - xs[c] * xs[c];
            if room < 0.0 {
                continue;
            }
            while hi[c] < ys.len() && ys[hi[c]] * ys[hi[c]] <= room {
                hi[c] += 1;
                total += 1;
            }
            while lo[c] > 0 && ys[lo[c] - 1] * ys[lo[c] - 1] <= room {
                lo[c] -= 1;
                total += 1;
            }
        }
        out.push(total);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate_gl;
    use crate::trigsys::builtin;
    use crate::zeroset::{enumerate_disk, EnumOptions};

    fn lattice(r: f64) -> ErrorSeries {
        let ps = enumerate_disk(&builtin("lattice").unwrap(), r, &EnumOptions::default()).unwrap();
        ErrorSeries::from_point_set(&ps, 1.0).unwrap()
    }

    #[test]
    fn err_values() {
        let s = lattice(10.0);
        assert!((s.err(5.0).unwrap() - (81.0 - 25.0 * PI)).abs() < 1e-12);
        assert!((s.err(10.0).unwrap() - (317.0 - 100.0 * PI)).abs() < 1e-12);
        assert!((s.ern(5.0).unwrap() - (81.0 - 25.0 * PI) / 5f64.sqrt()).abs() < 1e-12 && (s.ern(5.0).unwrap() - 1.100_227).abs() < 1e-6);
        assert!((s.ern(10.0).unwrap() - 0.898_319).abs() < 1e-6);
        assert!((s.err(1e-9).unwrap() - 1.0).abs() < 1e-12);
        assert!(s.err(10.5).is_err());
        assert!(s.ern(0.0).is_err());
    }

    #[test]
    fn abs_integral_on_unit_interval() {
        let s = lattice(3.0);
        let rs = 1.0 / PI.sqrt();
        let expected = 2.0 * (rs - PI * rs.powi(3) / 3.0) + PI / 3.0 - 1.0;
        assert!((s.integral_abs_err(1.0 - 1e-12).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 0.79946).abs() < 1e-5);
    }

    #[test]
    fn degenerate_series() {
        let s = ErrorSeries::from_sorted_radii(&[0.0], 0.0, 2.0).unwrap();
        assert!((s.integral_abs_err(2.0).unwrap() - 2.0).abs() < 1e-15);
        let z = ErrorSeries::from_sorted_radii(&[], 0.0, 5.0).unwrap();
        assert_eq!(z.integral_sq_ern(5.0).unwrap(), 0.0);
    }

    #[test]
    fn stable_piece_forms_match_naive() {
        for &(k, a, b) in &[(3.0, 1.0, 1.3), (5.0, 1.2, 1.9), (40.0, 3.0, 4.5)] {
            let naive = integrate_gl(|r: f64| (k - PI * r * r).powi(2) / r, a, b, 64);
            assert!((piece_sq(k, 1.0, a, b) - naive).abs() < 1e-12 * naive.max(1.0));
            let rs = (k / PI).sqrt().clamp(a, b);
            let naive_abs = integrate_gl(|r: f64| (k - PI * r * r).abs(), a, rs, 64)
                + integrate_gl(|r: f64| (k - PI * r * r).abs(), rs, b, 64);
            assert!((piece_abs(k, 1.0, a, b) - naive_abs).abs() < 1e-9);
        }
        // large k, tiny piece: the closed form must not cancel
        let (k, a) = (1.2566e7f64, 2000.0f64);
        let b = a + 1e-4;
        let mid = 0.5 * (a + b);
        let approx = (k - PI * mid * mid).powi(2) / mid * (b - a);
        assert!((piece_sq(k, 1.0, a, b) - approx).abs() < 1e-6 * approx);
    }

    #[test]
    fn jump_structure() {
        let s = lattice(6.0);
        // |(x,y)| = 5 has 12 lattice points
        let before = s.count(5.0 - 1e-6).unwrap();
        let after = s.count(5.0).unwrap();
        assert_eq!(after - before, 12);
        assert!(s.counts_after_jump().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn envelope_dominates_samples() {
        let s = lattice(60.0);
        let env = s.envelope(10.0, 60.0, 2f64.powf(0.25)).unwrap();
        let mut a = 10.0;
        for (b, m) in env {
            for k in 0..=200 {
                let r = a + (b - a) * k as f64 / 200.0;
                assert!(s.err(r).unwrap().abs() <= m + 1e-9);
            }
            a = b;
        }
    }

    #[test]
    fn fit_recovers_power_law() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.sqrt()).collect();
        let f = fit_exponent(&xs, &ys, (0.0, 100.0)).unwrap();
        assert!((f.theta - 0.5).abs() < 1e-12 && (f.prefactor() - 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(matches!(fit_exponent(&xs, &ys, (1.0, 5.0)), Err(FqError::InsufficientData { .. })));
        let mut bad = ys.clone();
        bad[3] = 0.0;
        assert!(matches!(fit_exponent(&xs, &bad, (0.0, 100.0)), Err(FqError::Domain(_))));
    }

    #[test]
    fn constant_histogram() {
        let h = histogram(&[2.5; 10], 7).unwrap();
        assert_eq!(h.masses.iter().filter(|&&m| m > 0.0).count(), 1);
        assert_eq!(h.mean, 2.5);
        assert_eq!(h.variance, 0.0);
        assert!(histogram(&[], 3).is_err());
    }

    #[test]
    fn product_counts_match_lattice() {
        let zs: Vec<f64> = (-30..=30).map(f64::from).collect();
        let radii: Vec<f64> = (0..=120).map(|i| i as f64 * 0.25).collect();
        let counts = product_counts(&zs, &zs, &radii).unwrap();
        let s = lattice(30.0);
        for (r, c) in radii.iter().zip(counts) {
            assert_eq!(c, s.count(*r).unwrap());
        }
    }
}
