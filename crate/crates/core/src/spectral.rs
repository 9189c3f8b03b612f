//! Candidate frequencies, empirical Fourier coefficients, radial lines and
//! the spectral constants and tail certificates built from them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::fit_exponent;
use crate::error::{FqError, Result};
use crate::mollifier::{bump, normalization, MollifierProfile};
use crate::numeric::integrate_adaptive;
use crate::trigsys::{cis_turns, dot, norm, FormTag, TrigSystem, Vec2};
use crate::zeroset::{roots_1d, EnumOptions, PointSet};

/// Entries closer than this in frequency are duplicates.
pub const DEDUP_TOL: f64 = 1e-9;
/// Default relative tolerance for grouping radii into lines.
pub const RADIAL_TOL: f64 = 1e-9;
pub const DEFAULT_CANDIDATE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub s: Vec2,
    pub c: Complex64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub entries: Vec<SpectrumEntry>,
    pub c0: f64,
    pub estimation_radius: f64,
    pub growth_rank: Option<u32>,
    /// Radius up to which candidates were examined; `None` when unknown.
    pub coverage: Option<f64>,
}

impl Spectrum {
    /// Sorts entries by `(‖s‖, s)` and rejects duplicates.
    pub fn new(mut entries: Vec<SpectrumEntry>, c0: f64, estimation_radius: f64, growth_rank: Option<u32>) -> Result<Self> {
        entries.sort_by(|a, b| {
            norm(a.s)
                .total_cmp(&norm(b.s))
                .then(a.s[0].total_cmp(&b.s[0]))
                .then(a.s[1].total_cmp(&b.s[1]))
        });
        for (i, e) in entries.iter().enumerate() {
            // entries within DEDUP_TOL have radii within DEDUP_TOL
            for f in entries[i + 1..].iter().take_while(|f| norm(f.s) - norm(e.s) <= DEDUP_TOL) {
                if (f.s[0] - e.s[0]).hypot(f.s[1] - e.s[1]) <= DEDUP_TOL {
                    return Err(FqError::DegenerateInput(format!("duplicate frequency ({}, {})", e.s[0], e.s[1])));
                }
            }
        }
        Ok(Self { entries, c0, estimation_radius, growth_rank, coverage: None })
    }

    pub fn with_coverage(mut self, gamma_max: f64) -> Self {
        self.coverage = Some(gamma_max);
        self
    }

    /// The entry at `s = 0`, if present.
    pub fn zero_entry(&self) -> Option<&SpectrumEntry> {
        self.entries.iter().find(|e| norm(e.s) <= DEDUP_TOL)
    }
}

/// A frequency `s = Lᵗk` together with its integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub s: Vec2,
    pub k: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialLine {
    pub gamma: f64,
    pub ell: Complex64,
    /// Indices into the spectrum's entries.
    pub members: Vec<usize>,
}

// ---------------------------------------------------------------------------
// Candidates

fn sort_candidates(c: &mut Vec<Candidate>) {
    c.sort_by(|a, b| {
        norm(a.s)
            .total_cmp(&norm(b.s))
            .then(a.s[0].total_cmp(&b.s[0]))
            .then(a.s[1].total_cmp(&b.s[1]))
    });
    c.dedup_by(|a, b| a.k == b.k);
}

/// `ℤ² ∩ B_γ`.
fn lattice_candidates(gamma: f64) -> Vec<Candidate> {
    let m = gamma.floor() as i64;
    let mut out = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            let s = [i as f64, j as f64];
            if norm(s) <= gamma {
                out.push(Candidate { s, k: vec![i, j] });
            }
        }
    }
    out
}

/// Same-sign combinations `Σ kᵢαᵢ` with `|Σ kᵢαᵢ| ≤ γ` for positive `αᵢ`.
pub fn axis_candidates(alphas: &[f64], gamma: f64) -> Vec<(f64, Vec<i64>)> {
    fn rec(alphas: &[f64], i: usize, acc: f64, k: &mut Vec<i64>, gamma: f64, out: &mut Vec<(f64, Vec<i64>)>) {
        if i == alphas.len() {
            out.push((acc, k.clone()));
            return;
        }
        let mut j = 0;
        while acc + j as f64 * alphas[i] <= gamma + 1e-12 {
            k.push(j);
            rec(alphas, i + 1, acc + j as f64 * alphas[i], k, gamma, out);
            k.pop();
            j += 1;
        }
    }
    let mut pos = Vec::new();
    rec(alphas, 0, 0.0, &mut Vec::new(), gamma, &mut pos);
    let mut out = Vec::with_capacity(2 * pos.len());
    for (u, k) in pos {
        if u > 0.0 {
            out.push((-u, k.iter().map(|x| -x).collect()));
        }
        out.push((u, k));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Lift rows split by axis for a product system: `(x rows, y rows)` as
/// indices and scalar frequencies.
fn product_axes(rows: &[Vec2]) -> Result<[Vec<(usize, f64)>; 2]> {
    let mut axes: [Vec<(usize, f64)>; 2] = [Vec::new(), Vec::new()];
    for (i, r) in rows.iter().enumerate() {
        match (r[0] != 0.0, r[1] != 0.0) {
            (true, false) if r[0] > 0.0 => axes[0].push((i, r[0])),
            (false, true) if r[1] > 0.0 => axes[1].push((i, r[1])),
            _ => {
                return Err(FqError::MalformedSystem(
                    "product lift rows must be positive multiples of a coordinate axis".into(),
                ))
            }
        }
    }
    if axes[0].is_empty() || axes[1].is_empty() {
        return Err(FqError::MalformedSystem("product lift needs rows on both axes".into()));
    }
    Ok(axes)
}

fn product_candidates(rows: &[Vec2], gamma: f64, cap: usize) -> Result<Vec<Candidate>> {
    let axes = product_axes(rows)?;
    let lists: Vec<Vec<(f64, Vec<i64>)>> = axes
        .iter()
        .map(|ax| axis_candidates(&ax.iter().map(|p| p.1).collect::<Vec<_>>(), gamma))
        .collect();
    let mut out = Vec::new();
    for (u, ku) in &lists[0] {
        let room = (gamma * gamma - u * u).max(0.0).sqrt();
        let lo = lists[1].partition_point(|p| p.0 < -room - 1e-12);
        let hi = lists[1].partition_point(|p| p.0 <= room + 1e-12);
        for (v, kv) in &lists[1][lo..hi] {
            if u.hypot(*v) > gamma {
                continue;
            }
            let mut k = vec![0i64; rows.len()];
            for (slot, kk) in axes[0].iter().zip(ku) {
                k[slot.0] = *kk;
            }
            for (slot, kk) in axes[1].iter().zip(kv) {
                k[slot.0] = *kk;
            }
            out.push(Candidate { s: [*u, *v], k });
            if out.len() > cap {
                return Err(FqError::Budget { count: out.len(), cap });
            }
        }
    }
    Ok(out)
}

/// `Lᵗk` with at most one sign change along the (angularly ordered) rows.
///
/// For a split index `j`, the rows `σᵢLᵢ` with `σ = (+…+, −…−)` lie in an
/// open half-plane with inward normal `n`, so `‖s‖ ≥ ⟨s, n⟩ = Σ|kᵢ|⟨σᵢLᵢ, n⟩`
/// bounds every coordinate and the enumeration is finite.
fn lifted_candidates(rows: &[Vec2], gamma: f64, cap: usize) -> Result<Vec<Candidate>> {
    let n = rows.len();
    let mut out: Vec<Candidate> = Vec::new();
    for split in 0..=n {
        for flip in [1i64, -1] {
            let signs: Vec<i64> = (0..n).map(|i| if i < split { flip } else { -flip }).collect();
            let vecs: Vec<Vec2> = rows
                .iter()
                .zip(&signs)
                .map(|(r, &s)| [r[0] * s as f64, r[1] * s as f64])
                .collect();
            let normal = half_plane_normal(&vecs)?;
            let margins: Vec<f64> = vecs.iter().map(|v| dot(*v, normal)).collect();
            let mut k = vec![0i64; n];
            enumerate_cone(&vecs, &margins, &signs, 0, [0.0, 0.0], 0.0, gamma, &mut k, &mut out, cap)?;
        }
    }
    Ok(out)
}

/// Unit vector maximising the minimum of `⟨vᵢ, n⟩`: the bisector of the two
/// extreme directions.
fn half_plane_normal(vecs: &[Vec2]) -> Result<Vec2> {
    let angles: Vec<f64> = vecs.iter().map(|v| v[1].atan2(v[0])).collect();
    // the set spans < π, so some vector's angle starts the counter-clockwise sweep
    for (i, &a0) in angles.iter().enumerate() {
        let rel: Vec<f64> = angles.iter().map(|&a| (a - a0).rem_euclid(2.0 * PI)).collect();
        let span = rel.iter().copied().fold(0.0, f64::max);
        if span < PI - 1e-9 {
            let mid = a0 + 0.5 * span;
            let _ = i;
            return Ok([mid.cos(), mid.sin()]);
        }
    }
    Err(FqError::MalformedSystem("lift rows do not lie in an open half-plane".into()))
}

#[allow(clippy::too_many_arguments)]
fn enumerate_cone(
    vecs: &[Vec2],
    margins: &[f64],
    signs: &[i64],
    i: usize,
    acc: Vec2,
    height: f64,
    gamma: f64,
    k: &mut Vec<i64>,
    out: &mut Vec<Candidate>,
    cap: usize,
) -> Result<()> {
    if i == vecs.len() {
        if norm(acc) <= gamma {
            out.push(Candidate { s: acc, k: k.clone() });
            if out.len() > cap {
                return Err(FqError::Budget { count: out.len(), cap });
            }
        }
        return Ok(());
    }
    let mut m = 0i64;
    loop {
        let h = height + m as f64 * margins[i];
        if h > gamma + 1e-12 {
            break;
        }
        k[i] = m * signs[i];
        let s = [acc[0] + m as f64 * vecs[i][0], acc[1] + m as f64 * vecs[i][1]];
        enumerate_cone(vecs, margins, signs, i + 1, s, h, gamma, k, out, cap)?;
        m += 1;
    }
    k[i] = 0;
    Ok(())
}

/// Candidate spectrum `{s = Lᵗk : ‖s‖ ≤ γ}` under the sign-change rule.
pub fn candidate_frequencies(sys: &TrigSystem, gamma_max: f64, cap: usize) -> Result<Vec<Candidate>> {
    if !(gamma_max > 0.0 && gamma_max.is_finite()) {
        return Err(FqError::Domain(format!("gamma_max must be positive, got {gamma_max}")));
    }
    let mut out = match sys.form() {
        FormTag::Lattice => lattice_candidates(gamma_max),
        FormTag::Product => {
            let rows = sys
                .lift()
                .ok_or_else(|| FqError::MalformedSystem("product system without lift rows".into()))?;
            product_candidates(rows, gamma_max, cap)?
        }
        FormTag::Lifted => lifted_candidates(sys.lift().expect("validated"), gamma_max, cap)?,
    };
    if out.len() > cap {
        return Err(FqError::Budget { count: out.len(), cap });
    }
    sort_candidates(&mut out);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Estimators

/// Sharp estimator `(1/πR²)Σ_{‖λ‖≤R} e^{−2πi⟨s,λ⟩}` with the spread against
/// radius `R/√2` as its error.
pub fn estimate_coefficient(ps: &PointSet, s: Vec2, big_r: f64) -> Result<SpectrumEntry> {
    if big_r > ps.radius() * (1.0 + 1e-12) || !(big_r > 0.0) {
        return Err(FqError::OutOfRange { what: "estimation radius", value: big_r, limit: ps.radius() });
    }
    let inner = big_r / 2f64.sqrt();
    let (mut full, mut half) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for p in ps.points() {
        let r = norm(*p);
        if r > big_r {
            continue;
        }
        let z = cis_turns(-dot(s, *p));
        full += z;
        if r <= inner {
            half += z;
        }
    }
    let c = full / (PI * big_r * big_r);
    let c_half = half / (PI * inner * inner);
    Ok(SpectrumEntry { s, c, stderr: (c - c_half).norm() })
}

/// Points per parallel work unit; fixed so sums do not depend on the
/// thread count.
const CHUNK: usize = 2048;
const BATCH: usize = 8;

/// Windowed estimator `(A/R²)Σ_λ bump(‖λ‖/R) e^{−2πi⟨s,λ⟩}` for every
/// candidate, evaluated together with the same sum at `R/√2`.
///
/// The window's transform decays faster than any power, so leakage from
/// spectrum points at distance `d` is `O(exp(−c√(Rd)))` instead of the
/// `O((Rd)^{−3/2})` of the sharp disk.
pub fn estimate_windowed(
    ps: &PointSet,
    sys: Option<&TrigSystem>,
    candidates: &[Candidate],
    big_r: f64,
) -> Result<Vec<SpectrumEntry>> {
    if big_r > ps.radius() * (1.0 + 1e-12) || !(big_r > 0.0) {
        return Err(FqError::OutOfRange { what: "estimation radius", value: big_r, limit: ps.radius() });
    }
    if candidates.is_empty() {
        return Err(FqError::DegenerateInput("no candidate frequencies".into()));
    }
    let pts: Vec<(Vec2, f64, f64)> = ps
        .points()
        .iter()
        .filter_map(|p| {
            let r = norm(*p);
            let w1 = bump(r / big_r);
            (w1 > 0.0).then(|| (*p, w1, bump(r * 2f64.sqrt() / big_r)))
        })
        .collect();
    let lifted = sys
        .filter(|s| s.form() == FormTag::Lifted)
        .and_then(|s| s.lift())
        .filter(|rows| candidates.iter().all(|c| c.k.len() == rows.len()));
    let nc = candidates.len();
    let chunk_sums = |chunk: &[(Vec2, f64, f64)]| -> Vec<(Complex64, Complex64)> {
        let mut acc = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); nc];
        match lifted {
            Some(rows) => lifted_chunk(rows, candidates, chunk, &mut acc),
            None => {
                for &(p, w1, w2) in chunk {
                    for (a, c) in acc.iter_mut().zip(candidates) {
                        let z = cis_turns(-dot(c.s, p));
                        a.0 += z * w1;
                        a.1 += z * w2;
                    }
                }
            }
        }
        acc
    };
    let chunks: Vec<&[(Vec2, f64, f64)]> = pts.chunks(CHUNK).collect();
    let mut total = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); nc];
    for batch in chunks.chunks(BATCH) {
        let parts: Vec<Vec<(Complex64, Complex64)>> = batch.par_iter().map(|c| chunk_sums(c)).collect();
        for part in parts {
            for (t, p) in total.iter_mut().zip(part) {
                t.0 += p.0;
                t.1 += p.1;
            }
        }
    }
    let a = normalization();
    let n1 = a / (big_r * big_r);
    let n2 = 2.0 * n1;
    let mass: f64 = pts.iter().map(|p| p.1).sum::<f64>() * n1;
    let floor = roundoff_floor(mass, pts.len());
    Ok(candidates
        .iter()
        .zip(total)
        .map(|(cand, (s1, s2))| {
            let c = s1 * n1;
            SpectrumEntry { s: cand.s, c, stderr: (c - s2 * n2).norm() + floor }
        })
        .collect())
}

/// Accumulated rounding bound for a sum of `n` unit phasors of total weight
/// `mass`.
fn roundoff_floor(mass: f64, n: usize) -> f64 {
    8.0 * f64::EPSILON * mass * (n.max(2) as f64).log2()
}

/// `e^{−2πi⟨s,λ⟩} = Π_j z_j^{−k_j}` with `z_j = e^{2πi⟨L_j,λ⟩}`: a few
/// complex products per candidate instead of a sine and cosine.
fn lifted_chunk(rows: &[Vec2], candidates: &[Candidate], chunk: &[(Vec2, f64, f64)], acc: &mut [(Complex64, Complex64)]) {
    let n = rows.len();
    let kmax = candidates.iter().flat_map(|c| c.k.iter()).map(|k| k.unsigned_abs()).max().unwrap_or(0) as usize;
    let width = 2 * kmax + 1;
    let mut table = vec![Complex64::new(0.0, 0.0); n * width];
    for &(p, w1, w2) in chunk {
        for (j, r) in rows.iter().enumerate() {
            let z = cis_turns(dot(*r, p));
            let zc = z.conj();
            let base = j * width + kmax;
            table[base] = Complex64::new(1.0, 0.0);
            let (mut up, mut down) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
            for m in 1..=kmax {
                // index +m holds z^{−m}, index −m holds z^{m}
                up *= zc;
                down *= z;
                if m % 16 == 0 {
                    up = cis_turns(-(m as f64) * dot(*r, p));
                    down = up.conj();
                }
                table[base + m] = up;
                table[base - m] = down;
            }
        }
        for (a, c) in acc.iter_mut().zip(candidates) {
            let mut z = table[(c.k[0] + kmax as i64) as usize];
            for j in 1..n {
                z *= table[j * width + (c.k[j] + kmax as i64) as usize];
            }
            a.0 += z * w1;
            a.1 += z * w2;
        }
    }
}

/// `∫_{−1}^{1} bump`.
fn bump_integral_1d() -> f64 {
    integrate_adaptive(bump, -1.0, 1.0, 4, 1 << 12, 1e-15).expect("smooth integrand")
}

/// One-dimensional windowed coefficients `(1/(R·I))Σ_x bump(x/R)e^{−2πiux}`
/// with their `R/√2` spreads.
fn estimate_1d(roots: &[f64], freqs: &[f64], big_r: f64) -> Vec<(Complex64, f64)> {
    let norm1 = 1.0 / (big_r * bump_integral_1d());
    let norm2 = 2f64.sqrt() * norm1;
    let weights: Vec<(f64, f64, f64)> = roots
        .iter()
        .filter_map(|&x| {
            let w1 = bump(x / big_r);
            (w1 > 0.0).then(|| (x, w1, bump(x * 2f64.sqrt() / big_r)))
        })
        .collect();
    let mass: f64 = weights.iter().map(|w| w.1).sum::<f64>() * norm1;
    let floor = roundoff_floor(mass, weights.len());
    freqs
        .par_iter()
        .map(|&u| {
            let (mut s1, mut s2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for &(x, w1, w2) in &weights {
                let z = cis_turns(-u * x);
                s1 += z * w1;
                s2 += z * w2;
            }
            let c = s1 * norm1;
            (c, (c - s2 * norm2).norm() + floor)
        })
        .collect()
}

/// Coefficients of a separable system as products of one-dimensional
/// windowed estimates along each axis, using the axis zero sets on `[−R, R]`.
pub fn estimate_separable(sys: &TrigSystem, candidates: &[Candidate], big_r: f64) -> Result<Vec<SpectrumEntry>> {
    if !sys.is_separable() {
        return Err(FqError::WrongForm { expected: "product or lattice" });
    }
    if candidates.is_empty() {
        return Err(FqError::DegenerateInput("no candidate frequencies".into()));
    }
    let opts = EnumOptions::default();
    let mut per_axis: Vec<std::collections::HashMap<u64, (Complex64, f64)>> = Vec::new();
    for axis in 0..2 {
        let roots = roots_1d(&sys.equations()[axis], axis, -big_r, big_r, &opts);
        let mut freqs: Vec<f64> = candidates.iter().map(|c| c.s[axis]).collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup();
        let coefs = estimate_1d(&roots, &freqs, big_r);
        per_axis.push(freqs.iter().map(|f| f.to_bits()).zip(coefs).collect());
    }
    Ok(candidates
        .iter()
        .map(|c| {
            let (cu, eu) = per_axis[0][&c.s[0].to_bits()];
            let (cv, ev) = per_axis[1][&c.s[1].to_bits()];
            SpectrumEntry { s: c.s, c: cu * cv, stderr: cu.norm() * ev + cv.norm() * eu + eu * ev }
        })
        .collect())
}

/// Zero-frequency windowed estimate: the density with its spread.
pub fn density_windowed(ps: &PointSet, big_r: f64) -> Result<(f64, f64)> {
    let e = estimate_windowed(ps, None, &[Candidate { s: [0.0, 0.0], k: vec![] }], big_r)?;
    Ok((e[0].c.re, e[0].stderr))
}

/// Thresholded estimation over a candidate superset. `c0` is the estimate
/// at `s = 0` from the same estimator.
pub fn detect_spectrum(ps: &PointSet, candidates: &[Candidate], big_r: f64, threshold: f64) -> Result<Spectrum> {
    detect_with(ps, None, candidates, big_r, threshold, None)
}

/// [`detect_spectrum`] choosing the fastest estimator for the system's form.
///
/// Separable systems are estimated from their axis zero sets on `[−R, R]`,
/// so `ps` is not consulted and `R` may exceed its radius.
pub fn detect_for_system(
    sys: &TrigSystem,
    ps: &PointSet,
    candidates: &[Candidate],
    big_r: f64,
    threshold: f64,
    rank: Option<u32>,
) -> Result<Spectrum> {
    detect_with(ps, Some(sys), candidates, big_r, threshold, rank)
}

fn detect_with(
    ps: &PointSet,
    sys: Option<&TrigSystem>,
    candidates: &[Candidate],
    big_r: f64,
    threshold: f64,
    rank: Option<u32>,
) -> Result<Spectrum> {
    if !(threshold > 0.0) {
        return Err(FqError::Domain(format!("threshold must be positive, got {threshold}")));
    }
    if candidates.is_empty() {
        return Err(FqError::DegenerateInput("no candidate frequencies".into()));
    }
    let has_zero = candidates.iter().any(|c| norm(c.s) == 0.0);
    let mut cands: Vec<Candidate> = candidates.to_vec();
    if !has_zero {
        let n = cands[0].k.len();
        cands.push(Candidate { s: [0.0, 0.0], k: vec![0; n] });
    }
    let estimates = match sys {
        Some(s) if s.is_separable() => estimate_separable(s, &cands, big_r)?,
        _ => estimate_windowed(ps, sys, &cands, big_r)?,
    };
    let zero = estimates.iter().find(|e| norm(e.s) == 0.0).expect("zero candidate present");
    let c0 = zero.c.re;
    let gamma_max = candidates.iter().map(|c| norm(c.s)).fold(0.0, f64::max);
    let kept: Vec<SpectrumEntry> = estimates
        .into_iter()
        .filter(|e| e.c.norm() >= threshold && (has_zero || norm(e.s) > 0.0))
        .collect();
    Ok(Spectrum::new(kept, c0, big_r, rank)?.with_coverage(gamma_max))
}

// ---------------------------------------------------------------------------
// Radial quantities

/// Groups nonzero entries by `‖s‖` (chains with gaps `≤ tol·γ`).
pub fn radial_lines(spec: &Spectrum, tol: f64) -> Vec<RadialLine> {
    let mut idx: Vec<(f64, usize)> = spec
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (norm(e.s), i))
        .filter(|(g, _)| *g > DEDUP_TOL)
        .collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut lines: Vec<RadialLine> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (g, i) in idx {
        if g - last <= tol * g {
            let line = lines.last_mut().expect("chained");
            line.ell += spec.entries[i].c;
            line.members.push(i);
        } else {
            lines.push(RadialLine { gamma: g, ell: spec.entries[i].c, members: vec![i] });
        }
        last = g;
    }
    for line in &mut lines {
        let sum: f64 = line.members.iter().map(|&i| norm(spec.entries[i].s)).sum();
        line.gamma = sum / line.members.len() as f64;
    }
    lines
}

fn check_coverage(spec: &Spectrum, r: f64) -> Result<()> {
    if let Some(cov) = spec.coverage {
        if r > cov * (1.0 + 1e-12) {
            return Err(FqError::OutOfRange { what: "spectral radius", value: r, limit: cov });
        }
    }
    Ok(())
}

/// `Σ_{s∈S∩B_r} |c_s|²`.
pub fn csq_partial_sum(spec: &Spectrum, r: f64) -> Result<f64> {
    check_coverage(spec, r)?;
    Ok(spec.entries.iter().filter(|e| norm(e.s) <= r).map(|e| e.c.norm_sqr()).sum())
}

/// `Σ_{s∈S∩B_r} |c_s|`.
pub fn abs_partial_sum(spec: &Spectrum, r: f64) -> Result<f64> {
    check_coverage(spec, r)?;
    Ok(spec.entries.iter().filter(|e| norm(e.s) <= r).map(|e| e.c.norm()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    /// Contribution of lines in `(γ_cut/2, γ_cut]`.
    pub last_octave: f64,
    /// Set when there were no lines at all.
    pub empty: bool,
}

/// `(1/2π²)Σ_{γ≤γ_cut} |ℓ(γ)|²/γ³`.
pub fn lower_bound_constant(lines: &[RadialLine], gamma_cut: f64) -> LowerBound {
    let term = |l: &RadialLine| l.ell.norm_sqr() / l.gamma.powi(3) / (2.0 * PI * PI);
    let value = lines.iter().filter(|l| l.gamma <= gamma_cut).map(term).sum();
    let last_octave = lines
        .iter()
        .filter(|l| l.gamma <= gamma_cut && l.gamma > 0.5 * gamma_cut)
        .map(term)
        .sum();
    LowerBound { value, last_octave, empty: lines.is_empty() }
}

// ---------------------------------------------------------------------------
// Tail certificates

/// Growth condition `Σ_{x∈X∩B_r, x≠0} |b_x| ≤ B·r^P` for `r ≥ δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Growth {
    pub b: f64,
    pub p: f64,
}

/// Smallest tabulated `C_q` with `q ≥ q_min`.
fn decay_at_least(m: &MollifierProfile, q_min: f64) -> Result<(f64, f64)> {
    m.decay_constants
        .iter()
        .copied()
        .filter(|(q, _)| *q >= q_min - 1e-12)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(FqError::UnsupportedExponent(q_min))
}

/// Bound on `Σ_{x≠0} |b_x Φ(t‖x‖)|/‖x‖^a` from the dyadic decomposition:
/// `B·C·δ^{P−a}·2^P·(first + second)` with
/// `second = (1 − 2^{−1−a})^{−1}(δt)^{a−P}` and
/// `first = (1 − 2^{P−a})^{−1}` for `P < a`, `(1 − 2^{a−P})^{−1}(δt)^{a−P}`
/// for `P > a`, where `C` bounds `|Φ(ρ)|⟨ρ⟩^{P+1}`.
pub fn dyadic_tail_bound(g: Growth, a: f64, t: f64, delta: f64, m: &MollifierProfile) -> Result<f64> {
    if (a - g.p).abs() < 1e-12 {
        return Err(FqError::UnsupportedExponent(a));
    }
    if !(g.b > 0.0 && t > 0.0 && delta > 0.0 && a > 0.0) {
        return Err(FqError::Domain("dyadic bound needs B, t, δ, a > 0".into()));
    }
    let (_, c) = decay_at_least(m, g.p + 1.0)?;
    let dt = delta * t;
    let second = (1.0 - 2f64.powf(-1.0 - a)).recip() * dt.powf(a - g.p);
    let first = if g.p < a {
        (1.0 - 2f64.powf(g.p - a)).recip()
    } else {
        (1.0 - 2f64.powf(a - g.p)).recip() * dt.powf(a - g.p)
    };
    Ok(g.b * c * delta.powf(g.p - a) * 2f64.powf(g.p) * (first + second))
}

/// Bound on the truncation tail `Σ_{‖x‖>Γ} |b_x Φ(t‖x‖)|/‖x‖^a`.
///
/// Shells `(2^kΓ, 2^{k+1}Γ]` hold mass at most `B(2^{k+1}Γ)^P`, on which
/// `|Φ(t‖x‖)|/‖x‖^a ≤ E(2^k tΓ)/(2^kΓ)^a` with `E` the profile's decreasing
/// envelope. Shells are summed while `E` comes from the table; past it
/// `E ≤ C_q⟨ρ⟩^{−q}` for a tabulated `q > P − a` and the remaining shells
/// form a geometric series of ratio `2^{P−a−q}`.
pub fn truncation_tail_bound(g: Growth, a: f64, t: f64, gamma_cut: f64, m: &MollifierProfile) -> Result<f64> {
    if !(g.b > 0.0 && t > 0.0 && gamma_cut > 0.0 && a > 0.0) {
        return Err(FqError::Domain("tail bound needs B, t, Γ, a > 0".into()));
    }
    let shell = |k: i32| {
        let lo = 2f64.powi(k) * gamma_cut;
        g.b * (2.0 * lo).powf(g.p) * m.envelope(t * lo) * lo.powf(-a)
    };
    let mut sum = 0.0;
    let mut k = 0;
    while 2f64.powi(k) * gamma_cut * t < m.rho_max() {
        sum += shell(k);
        k += 1;
        if k > 1000 {
            return Err(FqError::Domain("tail shells do not reach the table end".into()));
        }
    }
    let lo = 2f64.powi(k) * gamma_cut;
    let mut rest = f64::INFINITY;
    for &(q, c) in &m.decay_constants {
        let decay = g.p - a - q;
        if decay < 0.0 {
            // ⟨ρ⟩^{−q} ≤ ρ^{−q}
            let head = g.b * (2.0 * lo).powf(g.p) * c * (t * lo).powf(-q) * lo.powf(-a);
            rest = rest.min(head / (1.0 - 2f64.powf(decay)));
        }
    }
    if rest.is_finite() {
        Ok(sum + rest)
    } else {
        Err(FqError::UnsupportedExponent(a))
    }
}

/// Empirical growth `(B, P)` of `Σ_{0<‖s‖≤r}|c_s|` with `P` given: the
/// largest ratio over the spectrum's radii, times `safety`.
pub fn fit_growth(spec: &Spectrum, p: f64, safety: f64) -> Result<Growth> {
    let mut radii: Vec<(f64, f64)> = spec
        .entries
        .iter()
        .filter(|e| norm(e.s) > DEDUP_TOL)
        .map(|e| (norm(e.s), e.c.norm()))
        .collect();
    if radii.is_empty() {
        return Err(FqError::InsufficientData { needed: 1, got: 0 });
    }
    radii.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut b = 0.0f64;
    for (i, (r, c)) in radii.iter().enumerate() {
        acc += c;
        // evaluate after all entries at this radius are in
        if i + 1 == radii.len() || radii[i + 1].0 > *r {
            b = b.max(acc / r.powf(p));
        }
    }
    Ok(Growth { b: b * safety, p })
}

/// Fitted exponent `N` of `#(S ∩ B_r)` over `window`.
pub fn fit_spectrum_rank(spec: &Spectrum, window: (f64, f64)) -> Result<crate::counting::ExponentFit> {
    let mut radii: Vec<f64> = spec.entries.iter().map(|e| norm(e.s)).collect();
    radii.sort_by(f64::total_cmp);
    let steps = 24;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..steps {
        let r = window.0 * (window.1 / window.0).powf(i as f64 / (steps - 1) as f64);
        xs.push(r);
        ys.push(radii.partition_point(|&x| x <= r) as f64);
    }
    fit_exponent(&xs, &ys, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trigsys::builtin;
    use crate::zeroset::enumerate_disk;

    #[test]
    fn lattice_candidate_counts() {
        let sys = builtin("lattice").unwrap();
        assert_eq!(candidate_frequencies(&sys, 1.5, 100).unwrap().len(), 9);
        assert_eq!(candidate_frequencies(&sys, 2.5, 100).unwrap().len(), 21);
        assert!(matches!(candidate_frequencies(&sys, 2.5, 10), Err(FqError::Budget { .. })));
        assert!(candidate_frequencies(&sys, 0.0, 10).is_err());
    }

    #[test]
    fn lifted_candidates_respect_ball_and_lift() {
        let sys = builtin("fq-nonproduct").unwrap();
        let rows = sys.lift().unwrap().to_vec();
        let cands = candidate_frequencies(&sys, 4.0, 1_000_000).unwrap();
        assert!(!cands.is_empty());
        for c in &cands {
            assert!(norm(c.s) <= 4.0);
            let s: Vec2 = rows.iter().zip(&c.k).fold([0.0, 0.0], |a, (r, &k)| {
                [a[0] + k as f64 * r[0], a[1] + k as f64 * r[1]]
            });
            assert!((s[0] - c.s[0]).abs() < 1e-12 && (s[1] - c.s[1]).abs() < 1e-12);
            let changes = c.k.iter().filter(|&&k| k != 0).collect::<Vec<_>>().windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
            assert!(changes <= 1);
        }
    }

    #[test]
    fn lifted_candidates_are_complete_against_brute_force() {
        let sys = builtin("fq-main").unwrap();
        let rows = sys.lift().unwrap().to_vec();
        let cands = candidate_frequencies(&sys, 3.0, 1_000_000).unwrap();
        let mut brute = 0;
        for a in -12i64..=12 {
            for b in -12i64..=12 {
                for c in -12i64..=12 {
                    let k = [a, b, c];
                    let nz: Vec<i64> = k.iter().copied().filter(|&x| x != 0).collect();
                    if nz.windows(2).filter(|w| w[0].signum() != w[1].signum()).count() > 1 {
                        continue;
                    }
                    let s = [
                        a as f64 * rows[0][0] + b as f64 * rows[1][0] + c as f64 * rows[2][0],
                        a as f64 * rows[0][1] + b as f64 * rows[1][1] + c as f64 * rows[2][1],
                    ];
                    if norm(s) <= 3.0 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(cands.len(), brute);
    }

    #[test]
    fn sharp_estimator_on_lattice() {
        let ps = enumerate_disk(&builtin("lattice").unwrap(), 100.0, &EnumOptions::default()).unwrap();
        let e0 = estimate_coefficient(&ps, [0.0, 0.0], 100.0).unwrap();
        assert!((e0.c.re - 31417.0 / (10000.0 * PI)).abs() < 1e-12);
        let e1 = estimate_coefficient(&ps, [1.0, 0.0], 100.0).unwrap();
        assert!((e1.c - Complex64::new(1.0, 0.0)).norm() < 0.05);
        let eh = estimate_coefficient(&ps, [0.5, 0.0], 100.0).unwrap();
        assert!(eh.c.norm() <= 0.05);
        assert!(estimate_coefficient(&ps, [0.0, 0.0], 101.0).is_err());
    }

    #[test]
    fn lifted_fast_path_matches_generic() {
        let sys = builtin("fq-main").unwrap();
        let ps = enumerate_disk(&sys, 15.0, &EnumOptions::default()).unwrap();
        let cands = candidate_frequencies(&sys, 3.0, 100_000).unwrap();
        let fast = estimate_windowed(&ps, Some(&sys), &cands, 15.0).unwrap();
        let slow = estimate_windowed(&ps, None, &cands, 15.0).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a.c - b.c).norm() < 1e-12, "{:?} {:?}", a, b);
        }
    }

    #[test]
    fn radial_lines_of_lattice() {
        let sys = builtin("lattice").unwrap();
        let ps = enumerate_disk(&sys, 10.0, &EnumOptions::default()).unwrap();
        let cands = candidate_frequencies(&sys, 5f64.sqrt() + 1e-9, 1000).unwrap();
        let spec = detect_for_system(&sys, &ps, &cands, 50.0, 0.5, Some(2)).unwrap();
        let lines = radial_lines(&spec, RADIAL_TOL);
        let got: Vec<(f64, f64)> = lines.iter().map(|l| (l.gamma, l.ell.re)).collect();
        let want = [(1.0, 4.0), (2f64.sqrt(), 4.0), (2.0, 4.0), (5f64.sqrt(), 8.0)];
        assert_eq!(got.len(), 4);
        for (g, w) in got.iter().zip(want) {
            assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-6, "{got:?}");
        }
        let lb = lower_bound_constant(&lines, 5f64.sqrt() + 1e-9);
        let hand = (16.0 + 16.0 / 2f64.powf(1.5) + 2.0 + 64.0 / 5f64.powf(1.5)) / (2.0 * PI * PI);
        assert!((lb.value - hand).abs() < 1e-6 && (hand - 1.4884).abs() < 1e-4);
    }

    #[test]
    fn empty_inputs() {
        let spec = Spectrum::new(vec![], 1.0, 10.0, None).unwrap();
        assert!(radial_lines(&spec, RADIAL_TOL).is_empty());
        assert_eq!(csq_partial_sum(&spec, 3.0).unwrap(), 0.0);
        let lb = lower_bound_constant(&[], 3.0);
        assert!(lb.empty && lb.value == 0.0);
        let zero = RadialLine { gamma: 1.0, ell: Complex64::new(0.0, 0.0), members: vec![] };
        assert_eq!(lower_bound_constant(&[zero], 2.0).value, 0.0);
    }

    #[test]
    fn duplicate_entries_rejected() {
        let e = SpectrumEntry { s: [1.0, 0.0], c: Complex64::new(1.0, 0.0), stderr: 0.0 };
        let mut f = e;
        f.s[0] += 1e-12;
        assert!(Spectrum::new(vec![e, f], 1.0, 10.0, None).is_err());
    }

    #[test]
    fn dyadic_bound_properties() {
        let m = MollifierProfile::standard();
        let g = Growth { b: 4.0, p: 2.0 };
        assert!(matches!(dyadic_tail_bound(g, 2.0, 0.1, 1.0, m), Err(FqError::UnsupportedExponent(_))));
        // a > P, t ≥ 1: bounded by twice the t = ∞ constant
        let g1 = Growth { b: 4.0, p: 1.0 };
        let w = dyadic_tail_bound(g1, 1.5, 1e12, 1.0, m).unwrap();
        assert!(dyadic_tail_bound(g1, 1.5, 1.0, 1.0, m).unwrap() <= 2.0 * w.max(1e-300) * 1e12);
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let v = dyadic_tail_bound(g, 1.5, i as f64 * 0.02, 1.0, m).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }
}
