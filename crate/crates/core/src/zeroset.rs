//! Enumeration of the joint zero set `{f = 0, g = 0}` inside a closed disk.
//!
//! Separable systems (product and lattice forms) are solved axis by axis and
//! combined; lifted systems are scanned on a square grid, where each cell is
//! either excluded by a second-order Taylor bound or handed to damped Newton.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CellDiagnostic, FqError, Result};
use crate::numeric::fit_line;
use crate::spatial::{dedup_by_score, min_pairwise_distance};
use crate::trigsys::{cis_turns, norm, TrigPoly, TrigSystem, Vec2};

/// Points this close outside the nominal radius still count as inside.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumOptions {
    pub grid_step: f64,
    pub newton_iters: usize,
    pub dedup_radius: f64,
    pub residual_tol: f64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        Self::with_step(0.05)
    }
}

impl EnumOptions {
    pub fn with_step(h: f64) -> Self {
        Self { grid_step: h, newton_iters: 40, dedup_radius: h / 10.0, residual_tol: 1e-10 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(FqError::Domain(format!("grid_step must be positive, got {}", self.grid_step)));
        }
        if !(self.dedup_radius > 0.0 && self.dedup_radius < self.grid_step) {
            return Err(FqError::Domain("dedup_radius must lie in (0, grid_step)".into()));
        }
        if !(self.residual_tol > 0.0) || self.newton_iters == 0 {
            return Err(FqError::Domain("residual_tol and newton_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSource {
    pub name: String,
    pub radius: f64,
    pub grid_step: f64,
}

/// A finite sample of a zero set: every point of `Λ ∩ B_radius`.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<Vec2>,
    radii_sorted: Vec<f64>,
    separation: f64,
    density: f64,
    pub source: PointSource,
    /// Cells that needed subdivision before Newton converged.
    pub diagnostics: Vec<CellDiagnostic>,
}

impl PointSet {
    /// Assembles a point set, computing sorted radii, separation and the
    /// naive density `count / (π r²)`.
    pub fn from_points(points: Vec<Vec2>, source: PointSource) -> Result<Self> {
        let separation = min_pairwise_distance(&points).unwrap_or(f64::INFINITY);
        if separation <= 0.0 {
            return Err(FqError::DegenerateInput("duplicate points".into()));
        }
        Ok(Self::assemble(points, separation, source))
    }

    /// Like [`PointSet::from_points`] with a separation already known (cache
    /// loads).
    pub(crate) fn assemble(points: Vec<Vec2>, separation: f64, source: PointSource) -> Self {
        let mut radii_sorted: Vec<f64> = points.iter().map(|p| norm(*p)).collect();
        radii_sorted.sort_by(f64::total_cmp);
        let density = points.len() as f64 / (PI * source.radius * source.radius);
        Self { points, radii_sorted, separation, density, source, diagnostics: Vec::new() }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn radii_sorted(&self) -> &[f64] {
        &self.radii_sorted
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn radius(&self) -> f64 {
        self.source.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Separable systems

/// Simple roots of a one-variable trigonometric polynomial in `[lo, hi]`.
pub(crate) fn roots_1d(poly: &TrigPoly, axis: usize, lo: f64, hi: f64, opts: &EnumOptions) -> Vec<f64> {
    let h = opts.grid_step;
    let hess = poly.hessian_bound();
    let n = ((hi - lo) / h).ceil() as usize;
    let node = |i: usize| lo + i as f64 * h;
    let vals: Vec<(f64, f64)> = (0..=n)
        .into_par_iter()
        .map(|i| poly.value_and_derivative_1d(axis, node(i)))
        .collect();
    let mut roots: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            scan_interval(poly, axis, node(i), node(i + 1), vals[i], vals[i + 1], hess, opts, 0, &mut out);
            out
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    let mut deduped: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match deduped.last() {
            Some(&p) if r - p <= opts.dedup_radius => {
                let (vp, _) = poly.value_and_derivative_1d(axis, p);
                let (vr, _) = poly.value_and_derivative_1d(axis, r);
                if vr.abs() < vp.abs() {
                    *deduped.last_mut().unwrap() = r;
                }
            }
            _ => deduped.push(r),
        }
    }
    deduped
}

#[allow(clippy::too_many_arguments)]
fn scan_interval(
    poly: &TrigPoly,
    axis: usize,
    a: f64,
    b: f64,
    fa: (f64, f64),
    fb: (f64, f64),
    hess: f64,
    opts: &EnumOptions,
    depth: u32,
    out: &mut Vec<f64>,
) {
    let w = b - a;
    if fa.0 == 0.0 {
        out.push(a);
    }
    if fb.0 == 0.0 {
        out.push(b);
    }
    if fa.0 * fb.0 < 0.0 {
        if let Some(r) = bracketed_root(poly, axis, a, b, fa.0, opts) {
            out.push(r);
        }
        // A sign change with an odd number ≥ 3 of roots inside is excluded by
        // the subdivision below only when the cell is small enough; catalog
        // zero sets are separated far beyond the default step.
        return;
    }
    // No sign change: exclude if a second-order bound keeps |f| away from 0.
    let excluded = |v: (f64, f64)| v.0.abs() > v.1.abs() * w + 0.5 * hess * w * w;
    if excluded(fa) || excluded(fb) || depth >= 10 {
        return;
    }
    let m = 0.5 * (a + b);
    let fm = poly.value_and_derivative_1d(axis, m);
    scan_interval(poly, axis, a, m, fa, fm, hess, opts, depth + 1, out);
    scan_interval(poly, axis, m, b, fm, fb, hess, opts, depth + 1, out);
}

/// Safeguarded Newton–bisection on a sign-change bracket.
fn bracketed_root(poly: &TrigPoly, axis: usize, mut a: f64, mut b: f64, fa: f64, opts: &EnumOptions) -> Option<f64> {
    let neg_at_a = fa < 0.0;
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (v, d) = poly.value_and_derivative_1d(axis, x);
        if v == 0.0 {
            break;
        }
        if (v < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let newton = x - v / d;
        let next = if d != 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * (1.0 + x.abs()) || b - a <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    let (v, _) = poly.value_and_derivative_1d(axis, x);
    (v.abs() <= opts.residual_tol).then_some(x)
}

fn enumerate_separable(sys: &TrigSystem, r: f64, opts: &EnumOptions) -> Result<Vec<Vec2>> {
    let h = opts.grid_step;
    let [f, g] = sys.equations();
    let xs = roots_1d(f, 0, -r - h, r + h, opts);
    let ys = roots_1d(g, 1, -r - h, r + h, opts);
    Ok(cartesian_in_disk(&xs, &ys, r))
}

/// `(xs × ys) ∩ B_r`, closed ball with [`BOUNDARY_TOL`].
pub(crate) fn cartesian_in_disk(xs: &[f64], ys: &[f64], r: f64) -> Vec<Vec2> {
    let rr = r + BOUNDARY_TOL;
    let mut points = Vec::new();
    for &x in xs {
        if x.abs() > rr {
            continue;
        }
        let ymax = (rr * rr - x * x).max(0.0).sqrt();
        let lo = ys.partition_point(|&y| y < -ymax - 1e-12);
        let hi = ys.partition_point(|&y| y <= ymax + 1e-12);
        for &y in &ys[lo..hi] {
            if x.hypot(y) <= rr {
                points.push([x, y]);
            }
        }
    }
    points
}

// ---------------------------------------------------------------------------
// Lifted systems

/// Precomputed half term list of one equation: terms with positive
/// frequency (lexicographically) weighted by 2, the zero term by 1.
struct HalfTerms {
    coef: Vec<Complex64>,
    freq: Vec<Vec2>,
    hess: f64,
}

impl HalfTerms {
    fn new(poly: &TrigPoly) -> Self {
        let mut coef = Vec::new();
        let mut freq = Vec::new();
        for t in poly.terms() {
            let w = t.frequency;
            let positive = w[0] > 0.0 || (w[0] == 0.0 && w[1] > 0.0);
            if positive {
                coef.push(t.coefficient * 2.0);
                freq.push(w);
            } else if w == [0.0, 0.0] {
                coef.push(t.coefficient);
                freq.push(w);
            }
        }
        Self { coef, freq, hess: poly.hessian_bound() }
    }
}

#[derive(Clone, Copy, Default)]
struct NodeVal {
    v: f64,
    gx: f64,
    gy: f64,
}

impl NodeVal {
    #[inline]
    fn excludes(&self, h: f64, hess: f64) -> bool {
        // For p with |p − node|∞ ≤ h: |f(p)| ≥ |f| − (|fx|+|fy|)h − H·h².
        self.v.abs() > (self.gx.abs() + self.gy.abs()) * h + hess * h * h
    }
}

struct GridScan<'a> {
    sys: &'a TrigSystem,
    eqs: [HalfTerms; 2],
    x0: f64,
    h: f64,
    nx: usize,
    /// col_phase[e][t][i] = e^{2πi ω₁ x_i} for term t of equation e.
    col_phase: [Vec<Vec<Complex64>>; 2],
    opts: EnumOptions,
    r: f64,
}

#[derive(Default)]
struct StripResult {
    roots: Vec<(Vec2, f64)>,
    resolved: Vec<CellDiagnostic>,
    failed: Vec<CellDiagnostic>,
}

impl<'a> GridScan<'a> {
    fn new(sys: &'a TrigSystem, r: f64, opts: EnumOptions) -> Self {
        let h = opts.grid_step;
        let extent = r + h;
        let nx = (2.0 * extent / h).ceil() as usize;
        let x0 = -extent;
        let eqs = [HalfTerms::new(&sys.equations()[0]), HalfTerms::new(&sys.equations()[1])];
        let col_phase = [0, 1].map(|e| {
            eqs[e]
                .freq
                .iter()
                .map(|w| (0..=nx).map(|i| cis_turns(w[0] * (x0 + i as f64 * h))).collect())
                .collect()
        });
        Self { sys, eqs, x0, h, nx, col_phase, opts, r }
    }

    fn node_row(&self, y: f64, i_lo: usize, i_hi: usize) -> [Vec<NodeVal>; 2] {
        [0, 1].map(|e| {
            let terms = &self.eqs[e];
            let row: Vec<Complex64> = terms
                .coef
                .iter()
                .zip(&terms.freq)
                .map(|(c, w)| c * cis_turns(w[1] * y))
                .collect();
            (i_lo..=i_hi)
                .map(|i| {
                    let mut n = NodeVal::default();
                    for (t, q) in row.iter().enumerate() {
                        let z = q * self.col_phase[e][t][i];
                        let w = terms.freq[t];
                        n.v += z.re;
                        n.gx -= 2.0 * PI * w[0] * z.im;
                        n.gy -= 2.0 * PI * w[1] * z.im;
                    }
                    n
                })
                .collect()
        })
    }

    fn residual(&self, x: Vec2) -> (Vec2, [Vec2; 2]) {
        let [f, g] = self.sys.equations();
        let (fv, fg) = f.value_and_gradient(x);
        let (gv, gg) = g.value_and_gradient(x);
        ([fv, gv], [fg, gg])
    }

    /// Damped Newton from `start`; `None` on divergence or if the iterate
    /// leaves a neighbourhood of a few cells.
    fn newton(&self, start: Vec2) -> Option<(Vec2, f64)> {
        let tol = self.opts.residual_tol;
        let mut x = start;
        let (mut fval, mut jac) = self.residual(x);
        let mut fnorm = norm(fval);
        for _ in 0..self.opts.newton_iters {
            if fnorm <= 1e-3 * tol {
                break;
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dx = -(jac[1][1] * fval[0] - jac[0][1] * fval[1]) / det;
            let dy = -(-jac[1][0] * fval[0] + jac[0][0] * fval[1]) / det;
            let mut step = 1.0;
            loop {
                let trial = [x[0] + step * dx, x[1] + step * dy];
                let (tv, tj) = self.residual(trial);
                let tn = norm(tv);
                if tn < fnorm || step < 1e-3 {
                    x = trial;
                    fval = tv;
                    jac = tj;
                    let moved = step * dx.hypot(dy);
                    fnorm = tn;
                    if moved <= 1e-15 * (1.0 + norm(x)) {
                        return (fnorm <= tol).then_some((x, fnorm));
                    }
                    break;
                }
                step *= 0.5;
            }
            if (x[0] - start[0]).abs().max((x[1] - start[1]).abs()) > 4.0 * self.h {
                return None;
            }
        }
        (fnorm <= tol).then_some((x, fnorm))
    }

    fn handle_cell(&self, lo: Vec2, corners: [[NodeVal; 4]; 2], out: &mut StripResult) {
        let h = self.h;
        let excluded = |e: usize| corners[e].iter().any(|n| n.excludes(h, self.eqs[e].hess));
        if excluded(0) || excluded(1) {
            return;
        }
        let sign_change = |e: usize| {
            let pos = corners[e].iter().any(|n| n.v > 0.0);
            let neg = corners[e].iter().any(|n| n.v < 0.0);
            pos && neg
        };
        let centre = [lo[0] + 0.5 * h, lo[1] + 0.5 * h];
        if let Some(root) = self.newton(centre) {
            out.roots.push(root);
            return;
        }
        if !(sign_change(0) && sign_change(1)) {
            return;
        }
        // Subdivide once and retry from the four sub-cell centres.
        let mut found = false;
        for (qx, qy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
            if let Some(root) = self.newton([lo[0] + qx * h, lo[1] + qy * h]) {
                out.roots.push(root);
                found = true;
            }
        }
        let diag = CellDiagnostic { lo, side: h, last_residual: norm(self.residual(centre).0) };
        if found {
            out.resolved.push(diag);
        } else {
            out.failed.push(diag);
        }
    }

    fn scan_strip(&self, j_lo: usize, j_hi: usize) -> StripResult {
        let mut out = StripResult::default();
        let h = self.h;
        let extent = self.r + h;
        for j in j_lo..j_hi {
            let y0 = self.x0 + j as f64 * h;
            let y1 = y0 + h;
            // columns whose cells can meet the disk
            let ymin = if y0 <= 0.0 && y1 >= 0.0 { 0.0 } else { y0.abs().min(y1.abs()) };
            if ymin > extent {
                continue;
            }
            let half = (extent * extent - ymin * ymin).max(0.0).sqrt() + h;
            let i_lo = (((-half - self.x0) / h).floor().max(0.0)) as usize;
            let i_hi = ((((half - self.x0) / h).ceil()) as usize).min(self.nx);
            if i_hi <= i_lo {
                continue;
            }
            let bottom = self.node_row(y0, i_lo, i_hi);
            let top = self.node_row(y1, i_lo, i_hi);
            for k in 0..(i_hi - i_lo) {
                let corners = [0, 1].map(|e| [bottom[e][k], bottom[e][k + 1], top[e][k], top[e][k + 1]]);
                let lo = [self.x0 + (i_lo + k) as f64 * h, y0];
                self.handle_cell(lo, corners, &mut out);
            }
        }
        out
    }
}

fn enumerate_grid(sys: &TrigSystem, r: f64, opts: &EnumOptions) -> Result<(Vec<Vec2>, Vec<CellDiagnostic>)> {
    let scan = GridScan::new(sys, r, *opts);
    let ny = scan.nx;
    const STRIP: usize = 16;
    let strips: Vec<StripResult> = (0..ny.div_ceil(STRIP))
        .into_par_iter()
        .map(|s| scan.scan_strip(s * STRIP, ((s + 1) * STRIP).min(ny)))
        .collect();
    let mut roots = Vec::new();
    let mut resolved = Vec::new();
    let mut failed = Vec::new();
    for s in strips {
        roots.extend(s.roots);
        resolved.extend(s.resolved);
        failed.extend(s.failed);
    }
    if !failed.is_empty() {
        return Err(FqError::EnumerationIncomplete { cells: failed });
    }
    let rr = r + BOUNDARY_TOL;
    roots.retain(|(p, _)| norm(*p) <= rr);
    let pts: Vec<Vec2> = roots.iter().map(|r| r.0).collect();
    let score: Vec<f64> = roots.iter().map(|r| r.1).collect();
    let mut kept: Vec<Vec2> = dedup_by_score(&pts, &score, opts.dedup_radius)
        .into_iter()
        .map(|i| pts[i])
        .collect();
    kept.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok((kept, resolved))
}

/// All points of the zero set in the closed disk of radius `r`.
pub fn enumerate_disk(sys: &TrigSystem, r: f64, opts: &EnumOptions) -> Result<PointSet> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(FqError::Domain(format!("radius must be positive, got {r}")));
    }
    opts.validate()?;
    let (mut points, diagnostics) = if sys.is_separable() {
        (enumerate_separable(sys, r, opts)?, Vec::new())
    } else {
        enumerate_grid(sys, r, opts)?
    };
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let source = PointSource { name: String::new(), radius: r, grid_step: opts.grid_step };
    let mut ps = PointSet::from_points(points, source)?;
    ps.diagnostics = diagnostics;
    Ok(ps)
}

/// Largest residual `‖(f, g)(λ)‖` over the set.
pub fn max_residual(sys: &TrigSystem, ps: &PointSet) -> f64 {
    ps.points
        .par_iter()
        .map(|p| {
            let [f, g] = sys.equations();
            f.value_and_gradient(*p).0.hypot(g.value_and_gradient(*p).0)
        })
        .reduce(|| 0.0, f64::max)
}

/// `#(Λ ∩ B_r)` by binary search on the sorted radii.
pub fn count_in_ball(ps: &PointSet, r: f64) -> Result<usize> {
    if r > ps.source.radius * (1.0 + 1e-12) || r.is_nan() {
        return Err(FqError::OutOfRange { what: "radius", value: r, limit: ps.source.radius });
    }
    Ok(ps.radii_sorted.partition_point(|&x| x <= r + BOUNDARY_TOL))
}

/// Exact minimum pairwise distance.
pub fn estimate_separation(ps: &PointSet) -> Result<f64> {
    min_pairwise_distance(&ps.points)
        .ok_or_else(|| FqError::DegenerateInput("separation needs at least two points".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub density: f64,
    pub stderr: f64,
}

/// Number of radii used by [`estimate_density`].
pub const DENSITY_GRID: usize = 64;

/// Least-squares slope of `#(Λ∩B_r)` against `πr²` over an even radius grid
/// on `[r_lo, r_hi]`.
pub fn estimate_density(ps: &PointSet, r_lo: f64, r_hi: f64) -> Result<DensityEstimate> {
    estimate_density_with(ps, r_lo, r_hi, DENSITY_GRID)
}

pub fn estimate_density_with(ps: &PointSet, r_lo: f64, r_hi: f64, n: usize) -> Result<DensityEstimate> {
    if !(r_lo < r_hi) {
        return Err(FqError::Domain(format!("need r_lo < r_hi, got [{r_lo}, {r_hi}]")));
    }
    if n < 8 {
        return Err(FqError::InsufficientData { needed: 8, got: n });
    }
    let mut area = Vec::with_capacity(n);
    let mut count = Vec::with_capacity(n);
    for k in 0..n {
        let r = r_lo + (r_hi - r_lo) * k as f64 / (n - 1) as f64;
        count.push(count_in_ball(ps, r)? as f64);
        area.push(PI * r * r);
    }
    let fit = fit_line(&area, &count);
    Ok(DensityEstimate { density: fit.slope, stderr: fit.slope_stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trigsys::builtin;

    /// 1 + 4⌊r⌋ + 4 Σ_{i=1}^{⌊r⌋} ⌊√(r² − i²)⌋
    fn gauss_count(r: i64) -> usize {
        let mut n = 1 + 4 * r;
        for i in 1..=r {
            let mut m = ((r * r - i * i) as f64).sqrt() as i64;
            while m * m > r * r - i * i {
                m -= 1;
            }
            while (m + 1) * (m + 1) <= r * r - i * i {
                m += 1;
            }
            n += 4 * m;
        }
        n as usize
    }

    #[test]
    fn oracle_values() {
        assert_eq!(gauss_count(5), 81);
        assert_eq!(gauss_count(10), 317);
        assert_eq!(gauss_count(100), 31417);
    }

    #[test]
    fn lattice_counts() {
        let sys = builtin("lattice").unwrap();
        let ps = enumerate_disk(&sys, 5.0, &EnumOptions::default()).unwrap();
        assert_eq!(ps.len(), 81);
        let ps = enumerate_disk(&sys, 0.5, &EnumOptions::default()).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps.points()[0], [0.0, 0.0]);
    }

    #[test]
    fn count_in_ball_rejects_out_of_range() {
        let ps = enumerate_disk(&builtin("lattice").unwrap(), 5.0, &EnumOptions::default()).unwrap();
        assert!(matches!(count_in_ball(&ps, 6.0), Err(FqError::OutOfRange { .. })));
        assert_eq!(count_in_ball(&ps, 0.0).unwrap(), 1);
    }

    #[test]
    fn count_without_origin() {
        let ps = enumerate_disk(&builtin("shifted-lattice").unwrap(), 5.0, &EnumOptions::default()).unwrap();
        assert_eq!(count_in_ball(&ps, 0.0).unwrap(), 0);
    }

    #[test]
    fn separation_needs_two_points() {
        let ps = enumerate_disk(&builtin("lattice").unwrap(), 0.5, &EnumOptions::default()).unwrap();
        assert!(matches!(estimate_separation(&ps), Err(FqError::DegenerateInput(_))));
    }

    #[test]
    fn rejects_bad_options() {
        let sys = builtin("lattice").unwrap();
        let mut opts = EnumOptions::default();
        opts.dedup_radius = 1.0;
        assert!(enumerate_disk(&sys, 5.0, &opts).is_err());
        assert!(enumerate_disk(&sys, -1.0, &EnumOptions::default()).is_err());
    }

    #[test]
    fn density_window_too_thin() {
        let ps = enumerate_disk(&builtin("lattice").unwrap(), 10.0, &EnumOptions::default()).unwrap();
        assert!(matches!(
            estimate_density_with(&ps, 2.0, 9.0, 5),
            Err(FqError::InsufficientData { .. })
        ));
    }

    #[test]
    fn fq_main_origin_and_residuals() {
        let sys = builtin("fq-main").unwrap();
        let ps = enumerate_disk(&sys, 8.0, &EnumOptions::default()).unwrap();
        assert_eq!(count_in_ball(&ps, 0.0).unwrap(), 1);
        assert!(max_residual(&sys, &ps) <= 1e-10);
    }
}
