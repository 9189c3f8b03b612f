//! Bessel functions of the first kind, orders 0 and 1, for real `x ≥ 0`.
//!
//! Three regimes: the Taylor series near the origin, Miller's backward
//! recurrence normalised by `J₀ + 2ΣJ₂ₖ = 1` in the transition range, and the
//! Hankel asymptotic expansion for large arguments.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{FqError, Result};

/// Upper end of the Taylor regime. The largest series term there is about
/// 1e2, so cancellation costs at most two digits.
pub const SERIES_MAX: f64 = 8.0;
/// Lower end of the Hankel regime.
pub const ASYMPTOTIC_MIN: f64 = 30.0;

/// `sup_{x>0} √x·|J₁(x)|` rounded up; attained near `x ≈ 2.166`.
pub const J1_SQRT_BOUND: f64 = 0.8251;

pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(FqError::Domain(format!("bessel argument must be finite and ≥ 0, got {x}")));
    }
    match order {
        0 => Ok(j0(x)),
        1 => Ok(j1(x)),
        n => Err(FqError::Domain(format!("unsupported Bessel order {n}"))),
    }
}

pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_MAX {
        series(0, x)
    } else if x < ASYMPTOTIC_MIN {
        miller(x).0
    } else {
        hankel(0, x)
    }
}

pub fn j1(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    let v = if x <= SERIES_MAX {
        series(1, x)
    } else if x < ASYMPTOTIC_MIN {
        miller(x).1
    } else {
        hankel(1, x)
    };
    s * v
}

/// `Σ_k (−1)^k (x/2)^{2k+ν} / (k!(k+ν)!)`
fn series(nu: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..60 {
        term *= q / (k as f64 * (k + nu) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `(J₀(x), J₁(x))` by backward recurrence from an order well above `x`.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x + 15.0 + (40.0 * x).sqrt()) as usize / 2) + 2;
    let (mut jp1, mut j) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let (mut j0v, mut j1v) = (0.0, 0.0);
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        // j now holds the order k−1 value
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * j;
        }
        if k == 2 {
            j1v = j;
        }
        if k == 1 {
            j0v = j;
            j1v = jp1;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            j1v *= 1e-250;
        }
    }
    norm += j0v;
    (j0v / norm, j1v / norm)
}

/// Hankel expansion `√(2/πx)(P cos χ − Q sin χ)`, `χ = x − (ν/2 + 1/4)π`.
fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let (mut p, mut q) = (1.0, 0.0);
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() >= prev || a.abs() < 1e-17 {
            break;
        }
        prev = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    let (s, c) = x.sin_cos();
    // cos χ, sin χ for χ = x − π/4 and x − 3π/4
    let (cc, sc) = if nu == 0 {
        ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2)
    } else {
        ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2)
    };
    (2.0 / (PI * x)).sqrt() * (p * cc - q * sc)
}

/// Leading Hankel term of `J₁`: `√(2/πx)·cos(x − 3π/4)`.
pub fn j1_leading(x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    (2.0 / (PI * x)).sqrt() * (s - c) * FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 50-digit evaluation.
    const REF: [(f64, f64, f64); 13] = [
        (0.5, 0.9384698072408129, 0.2422684576748739),
        (1.0, 0.7651976865579666, 0.4400505857449335),
        (7.9, 0.19436184484127825, 0.2191793999217512),
        (8.1, 0.14751745404437766, 0.24760776698159287),
        (10.0, -0.24593576445134835, 0.04347274616886144),
        (12.0, 0.047689310796833535, -0.2234471044906276),
        (20.0, 0.16702466434058316, 0.06683312417585005),
        (29.5, -0.1331478582983982, -0.0643043780991924),
        (30.5, -0.01938975451776215, -0.14349430015097095),
        (50.0, 0.055812327669251816, -0.09751182812517514),
        (100.0, 0.019985850304223122, -0.07714535201411216),
        (1000.0, 0.024786686152420176, 0.004728311907089524),
        (12345.6, -0.0005290500807391781, -0.007161490385020107),
    ];

    #[test]
    fn reference_values() {
        for (x, a, b) in REF {
            assert!((j0(x) - a).abs() < 1e-12, "J0({x}) = {} vs {a}", j0(x));
            assert!((j1(x) - b).abs() < 1e-12, "J1({x}) = {} vs {b}", j1(x));
        }
    }

    #[test]
    fn origin_values() {
        assert_eq!(j0(0.0), 1.0);
        assert_eq!(j1(0.0), 0.0);
        assert!(bessel_j(2, 1.0).is_err());
        assert!(bessel_j(0, -1.0).is_err());
    }

    #[test]
    fn first_zero_of_j1() {
        let (mut lo, mut hi) = (3.0, 4.5);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if series(1, lo) * series(1, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!(lo > 3.8317 && lo < 3.8318);
        assert!(j1(3.8317) > 0.0 && j1(3.8318) < 0.0);
    }

    #[test]
    fn regimes_agree_at_seams() {
        for x in [SERIES_MAX, ASYMPTOTIC_MIN] {
            let (a, b) = miller(x);
            assert!((a - j0(x)).abs() < 1e-13 && (b - j1(x)).abs() < 1e-13);
        }
        assert!((series(0, 8.0) - miller(8.0).0).abs() < 1e-13);
        assert!((hankel(1, 30.0) - miller(30.0).1).abs() < 1e-13);
    }

    #[test]
    fn leading_term_residual_decays_like_x_to_minus_three_halves() {
        let scaled: Vec<f64> = [50.0f64, 100.0, 200.0]
            .iter()
            .map(|&x| {
                let worst = (0..200)
                    .map(|k| x + k as f64 * 0.05)
                    .map(|y| (j1(y) - j1_leading(y)).abs() * y.powf(1.5))
                    .fold(0.0, f64::max);
                worst
            })
            .collect();
        // 3/8·√(2/π) ≈ 0.299 is the asymptotic envelope
        for s in &scaled {
            assert!(*s > 0.25 && *s < 0.32, "{scaled:?}");
        }
    }

    #[test]
    fn sqrt_bound_holds() {
        let mut worst = 0.0f64;
        for k in 1..400_000 {
            let x = k as f64 * 1e-3;
            worst = worst.max(x.sqrt() * j1(x).abs());
        }
        assert!(worst <= J1_SQRT_BOUND && worst > 0.825);
        // beyond the scan |J₁| ≤ √(2/πx)(1 + 3/(8x)) + O(x⁻²)
        assert!((2.0 / PI).sqrt() * (1.0 + 3.0 / 3200.0) < J1_SQRT_BOUND);
    }
}
