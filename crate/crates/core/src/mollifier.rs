//! The fixed radial bump `φ` on the unit disk, its radial Fourier profile `Φ`
//! and the smoothed ball indicator `1_{B_r} * φ_t`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::bessel::j0;
use crate::error::{FqError, Result};
use crate::numeric::{integrate_adaptive, integrate_gl};

/// Unnormalised bump `exp(−1/(1−u²))`, zero for `|u| ≥ 1`.
#[inline]
pub fn bump(u: f64) -> f64 {
    let d = 1.0 - u * u;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

/// `A` with `2π∫₀¹ A·bump(u)·u du = 1`.
pub fn normalization() -> f64 {
    static A: OnceLock<f64> = OnceLock::new();
    *A.get_or_init(|| {
        let m = integrate_adaptive(|u| bump(u) * u, 0.0, 1.0, 4, 1 << 12, 1e-15).expect("smooth integrand");
        1.0 / (2.0 * PI * m)
    })
}

/// Radial part of the unit-mass mollifier.
#[inline]
pub fn phi_rad(u: f64) -> f64 {
    normalization() * bump(u)
}

/// Mass of `φ` inside the disk of radius `u`.
pub fn mass_within(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    // integrate over the shorter side; the complement is flat near u = 1
    let f = |v: f64| 2.0 * PI * phi_rad(v) * v;
    if u <= 0.5 {
        integrate_gl(f, 0.0, u, 8)
    } else {
        1.0 - integrate_gl(f, u, 1.0, 8)
    }
}

/// Projection `g(x) = ∫ φ(x, y) dy` of the 2-D bump onto one axis.
fn projection(x: f64) -> f64 {
    let half = (1.0 - x * x).max(0.0).sqrt();
    if half == 0.0 {
        return 0.0;
    }
    2.0 * integrate_gl(|y| phi_rad((x * x + y * y).sqrt()), 0.0, half, 8)
}

/// `Φ(ρ) = 2π∫₀¹ φ_rad(u) J₀(2πρu) u du` by Gauss–Legendre panels sized to
/// the oscillation. Slow; used for spot checks and outside the table.
pub fn phi_hat_hankel(rho: f64) -> Result<f64> {
    let start = 4 + (4.0 * rho) as usize;
    integrate_adaptive(|u| phi_rad(u) * j0(2.0 * PI * rho * u) * u, 0.0, 1.0, start, start << 6, 1e-14)
        .map(|v| 2.0 * PI * v)
        .ok_or(FqError::Quadrature { rho })
}

/// Number of projection samples on `[0, 1]`.
const PROJECTION_SAMPLES: usize = 2048;

/// Absolute slack covering cubic interpolation error between table nodes.
const ENVELOPE_MARGIN: f64 = 1e-12;

/// Exponents `q` for which `|Φ(ρ)| ≤ C_q⟨ρ⟩^{−q}` is tabulated.
pub const DECAY_EXPONENTS: [f64; 12] = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0, 7.0, 8.0];

#[derive(Debug, Clone)]
pub struct MollifierProfile {
    table: Arc<Vec<f64>>,
    /// `suffix[k] = max_{j≥k} |table[j]|`
    suffix: Arc<Vec<f64>>,
    step: f64,
    rho_max: f64,
    /// `(q, C_q)` pairs.
    pub decay_constants: Vec<(f64, f64)>,
}

impl MollifierProfile {
    /// Tabulates `Φ` on `[0, rho_max]`.
    ///
    /// `Φ` is the 1-D Fourier transform of the projection `g` (projection-slice
    /// theorem). `g` is smooth and flat at `±1`, so the trapezoid rule on a
    /// uniform grid is spectrally accurate, and one zero-padded FFT of the
    /// samples yields `Φ` on a grid of step `table_step`.
    pub fn build(rho_max: f64, table_step: f64) -> Result<Self> {
        if !(rho_max > 0.0 && rho_max.is_finite()) {
            return Err(FqError::Domain(format!("rho_max must be positive, got {rho_max}")));
        }
        if !(table_step > 0.0 && table_step <= 0.05) {
            return Err(FqError::Domain(format!("table_step must lie in (0, 0.05], got {table_step}")));
        }
        let m = PROJECTION_SAMPLES;
        let h = 1.0 / m as f64;
        let n = (1.0 / (h * table_step)).round() as usize;
        let step = 1.0 / (h * n as f64);
        let samples: Vec<f64> = (0..=m).map(|j| projection(j as f64 * h)).collect();

        let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n];
        buf[0] = Complex::new(0.5 * samples[0], 0.0);
        for j in 1..=m {
            buf[j] = Complex::new(samples[j], 0.0);
        }
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let len = (rho_max / step).ceil() as usize + 3;
        if len >= n / 2 {
            return Err(FqError::Domain("rho_max too large for the projection grid".into()));
        }
        let table: Vec<f64> = buf[..len].iter().map(|z| 2.0 * h * z.re).collect();
        drop(buf);

        let mut decay_constants = Vec::new();
        for q in DECAY_EXPONENTS {
            let (mut best, mut at) = (0.0f64, 0.0);
            for (k, v) in table.iter().enumerate() {
                let rho = k as f64 * step;
                let w = v.abs() * (1.0 + rho * rho).powf(0.5 * q);
                if w > best {
                    best = w;
                    at = rho;
                }
            }
            // keep only exponents whose supremum is attained well inside the table
            if at < 0.5 * rho_max {
                decay_constants.push((q, best * (1.0 + 1e-9)));
            }
        }
        let mut suffix = vec![0.0; table.len()];
        let mut run = 0.0f64;
        for k in (0..table.len()).rev() {
            run = run.max(table[k].abs());
            suffix[k] = run;
        }
        Ok(Self { table: Arc::new(table), suffix: Arc::new(suffix), step, rho_max, decay_constants })
    }

    /// Profile with the default table: step 1e−3 on `[0, 200]`.
    pub fn standard() -> &'static Self {
        static P: OnceLock<MollifierProfile> = OnceLock::new();
        P.get_or_init(|| Self::build(200.0, 1e-3).expect("default profile"))
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn table_step(&self) -> f64 {
        self.step
    }

    /// `Φ(ρ)` by four-point cubic interpolation of the table; falls back to
    /// the Hankel quadrature beyond `rho_max`.
    pub fn phi_hat(&self, rho: f64) -> f64 {
        let rho = rho.abs();
        if rho > self.rho_max {
            return phi_hat_hankel(rho).unwrap_or(0.0);
        }
        let x = rho / self.step;
        let i = (x.floor() as usize).max(1).min(self.table.len() - 3);
        let f = x - i as f64;
        let t = &self.table;
        let (p0, p1, p2, p3) = (t[i - 1], t[i], t[i + 1], t[i + 2]);
        // Lagrange weights on nodes −1, 0, 1, 2
        let w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }

    /// Nonincreasing majorant of `|Φ|` on `[ρ, ∞)`: the table's suffix
    /// maximum (with one cell of slack and an interpolation margin) inside the
    /// table, the best `C_q⟨ρ⟩^{−q}` beyond it.
    pub fn envelope(&self, rho: f64) -> f64 {
        let rho = rho.abs();
        let power = self
            .decay_constants
            .iter()
            .map(|&(q, c)| c * (1.0 + rho * rho).powf(-0.5 * q) * (1.0 + 1e-4))
            .fold(f64::INFINITY, f64::min);
        if rho >= self.rho_max {
            return power;
        }
        let k = ((rho / self.step).floor() as usize).saturating_sub(1);
        let tabled = self.suffix[k.min(self.suffix.len() - 1)] * (1.0 + 1e-4) + ENVELOPE_MARGIN;
        tabled.min(power)
    }

    /// `C_q` for an exponent in [`DECAY_EXPONENTS`].
    pub fn decay_constant(&self, q: f64) -> Option<f64> {
        self.decay_constants.iter().find(|(e, _)| (e - q).abs() < 1e-12).map(|p| p.1)
    }
}

/// Radial value at `rho` of `1_{B_r} * φ_t`.
///
/// With `s = t·u` the distance from the evaluation point, the part of the
/// circle of radius `s` inside `B_r` subtends the angle `2·arccos κ`,
/// `κ = (ρ² + s² − r²)/(2ρs)`. The angle has a square-root corner at
/// `u₀ = |ρ − r|/t`, removed by the substitution `u = u₀ + w²`.
pub fn smoothed_indicator(r: f64, t: f64, rho: f64) -> Result<f64> {
    if !(r > 1.0) || !(t > 0.0 && t < 0.5) || !(rho >= 0.0) {
        return Err(FqError::Domain(format!("smoothed_indicator needs r > 1, t ∈ (0, 1/2), ρ ≥ 0; got r={r}, t={t}, ρ={rho}")));
    }
    if rho <= r - t {
        return Ok(1.0);
    }
    if rho >= r + t {
        return Ok(0.0);
    }
    let u0 = (rho - r).abs() / t;
    let inner = if rho < r { mass_within(u0) } else { 0.0 };
    let wmax = (1.0 - u0).sqrt();
    let outer = integrate_gl(
        |w| {
            let u = u0 + w * w;
            let s = t * u;
            let kappa = ((rho * rho + s * s - r * r) / (2.0 * rho * s)).clamp(-1.0, 1.0);
            phi_rad(u) * u * 2.0 * kappa.acos() * 2.0 * w
        },
        0.0,
        wmax,
        6,
    );
    Ok((inner + outer).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_constant() {
        // 1/(π(e⁻¹ − E₁(1)))
        let a = normalization();
        let e1 = 0.219_383_934_395_520_27;
        assert!((a - 1.0 / (PI * ((-1.0f64).exp() - e1))).abs() < 1e-12, "{a}");
        assert!((mass_within(1.0 - 1e-12) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_matches_hankel_quadrature() {
        let m = MollifierProfile::standard();
        assert!((m.phi_hat(0.0) - 1.0).abs() < 1e-12);
        for rho in [0.3, 1.0, 2.7182, 5.0, 11.5, 40.0] {
            let a = m.phi_hat(rho);
            let b = phi_hat_hankel(rho).unwrap();
            assert!((a - b).abs() < 1e-11, "ρ={rho}: {a} vs {b}");
        }
    }

    #[test]
    fn bounded_by_one() {
        let m = MollifierProfile::standard();
        for k in 0..20_000 {
            assert!(m.phi_hat(k as f64 * 0.01).abs() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn decay_constants_bound_the_table() {
        let m = MollifierProfile::standard();
        assert!(m.decay_constant(3.0).is_some() && m.decay_constant(4.0).is_some());
        for &(q, c) in &m.decay_constants {
            for k in 0..4000 {
                let rho = k as f64 * 0.05;
                assert!(m.phi_hat(rho).abs() <= c * (1.0 + rho * rho).powf(-0.5 * q) * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn envelope_majorises_and_decreases() {
        let m = MollifierProfile::standard();
        let mut prev = f64::INFINITY;
        for k in 0..30_000 {
            let rho = k as f64 * 0.00737;
            let e = m.envelope(rho);
            assert!(e >= m.phi_hat(rho).abs() && e <= prev, "ρ={rho}: {e} {} {prev}", m.phi_hat(rho));
            prev = e;
        }
        assert!(m.envelope(10.0) < 3e-5 && m.envelope(300.0) > 0.0);
    }

    #[test]
    fn indicator_support_and_range() {
        assert_eq!(smoothed_indicator(10.0, 0.25, 9.75).unwrap(), 1.0);
        assert_eq!(smoothed_indicator(10.0, 0.25, 10.25).unwrap(), 0.0);
        let mut prev = 1.0;
        for k in 0..=200 {
            let rho = 9.75 + 0.5 * k as f64 / 200.0;
            let v = smoothed_indicator(10.0, 0.25, rho).unwrap();
            assert!(v <= prev + 1e-14 && (0.0..=1.0).contains(&v), "ρ={rho}: {v} after {prev}");
            prev = v;
        }
        assert!(smoothed_indicator(1.0, 0.25, 1.0).is_err());
        assert!(smoothed_indicator(5.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn indicator_is_continuous_at_the_corner() {
        let a = smoothed_indicator(10.0, 0.25, 10.0 - 1e-9).unwrap();
        let b = smoothed_indicator(10.0, 0.25, 10.0).unwrap();
        let c = smoothed_indicator(10.0, 0.25, 10.0 + 1e-9).unwrap();
        assert!((a - b).abs() < 1e-7 && (b - c).abs() < 1e-7);
        // near-half mass at ρ = r, pulled below ½ by curvature
        assert!(b < 0.5 && b > 0.49);
    }
}
