//! The six subcommands. Each writes its CSVs, a manifest and a run log into
//! the output directory and returns whether every check passed.

use std::fs;
use std::time::Instant;

use fq_core::counting::{fit_exponent, histogram_ern, ErrorSeries};
use fq_core::mollifier::MollifierProfile;
use fq_core::smoothing::{besicovitch_coefficient, besicovitch_limit, sample, Truncation};
use fq_core::spectral::{lower_bound_constant, radial_lines, RADIAL_TOL};
use fq_core::Result;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::{OutputFile, RunManifest};
use crate::output::{write_csv, write_svg, Series};
use crate::pipeline::Pipeline;
use crate::suite::{self, geometric, running_max_err, Workbench};

/// Spacing of the `(r, count, err, ern)` dump.
pub const SERIES_STEP: f64 = 0.1;
/// Spacing of the `Ern` samples behind the histogram.
pub const HISTOGRAM_STEP: f64 = 0.01;
pub const HISTOGRAM_BINS: usize = 60;
/// Spacing of the smoothed-error samples.
pub const SMOOTH_STEP: f64 = 0.5;

fn finish(p: &Pipeline, command: &str, outputs: Vec<OutputFile>) -> Result<()> {
    RunManifest::new(command, &p.cfg, &p.derived, outputs).write(&p.cfg.output_dir, &p.log)
}

/// `lo, lo + step, …` up to `hi`, the last value clamped to `hi`.
fn linear(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).map(|r| r.min(hi)).collect()
}

/// Lower end of the default fit windows: `r_max/10` clamped to `[10, 50]`.
pub fn fit_lo(r_max: f64) -> f64 {
    (r_max / 10.0).clamp(10.0, 50.0)
}

pub fn enumerate(cfg: RunConfig) -> Result<bool> {
    let mut p = Pipeline::new(cfg)?;
    let ps = p.points(false)?;
    let sum = fq_core::cache::sha256_hex(&fs::read(p.points_path()).unwrap_or_default());
    let mut outputs = Vec::new();
    if p.cfg.cache {
        let file = p.points_path().strip_prefix(&p.cfg.output_dir).unwrap_or(&p.points_path()).display().to_string();
        outputs.push(OutputFile { file, sha256: sum });
    }
    println!("{}: {} points in B_{}, separation {:.6}", p.sys.tag, ps.len(), p.cfg.r_max, ps.separation());
    finish(&p, "enumerate", outputs)?;
    Ok(true)
}

#[derive(Serialize)]
struct SpectrumRow {
    s1: f64,
    s2: f64,
    re_c: f64,
    im_c: f64,
    abs_c: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct LineRow {
    gamma: f64,
    re_ell: f64,
    im_ell: f64,
    members: usize,
}

pub fn spectrum(cfg: RunConfig) -> Result<bool> {
    let mut p = Pipeline::new(cfg)?;
    let ps = p.points(false)?;
    let spec = p.spectrum(&ps)?;
    p.growth(&spec)?;
    let rows: Vec<SpectrumRow> = spec
        .entries
        .iter()
        .map(|e| SpectrumRow { s1: e.s[0], s2: e.s[1], re_c: e.c.re, im_c: e.c.im, abs_c: e.c.norm(), stderr: e.stderr })
        .collect();
    let lines = radial_lines(&spec, RADIAL_TOL);
    let line_rows: Vec<LineRow> = lines
        .iter()
        .map(|l| LineRow { gamma: l.gamma, re_ell: l.ell.re, im_ell: l.ell.im, members: l.members.len() })
        .collect();
    let dir = p.cfg.output_dir.clone();
    let outputs = vec![
        write_csv(&dir, "spectrum.csv", &["s1", "s2", "re_c", "im_c", "abs_c", "stderr"], &rows)?,
        write_csv(&dir, "radial_lines.csv", &["gamma", "re_ell", "im_ell", "members"], &line_rows)?,
    ];
    let lb = lower_bound_constant(&lines, p.cfg.gamma_max);
    println!(
        "{}: {} entries on {} radial lines up to γ = {}, c0 = {:.6}, lower-bound constant {:.6}",
        p.sys.tag,
        spec.entries.len(),
        lines.len(),
        p.cfg.gamma_max,
        spec.c0,
        lb.value
    );
    finish(&p, "spectrum", outputs)?;
    Ok(true)
}

#[derive(Serialize)]
struct SeriesRow {
    r: f64,
    count: u64,
    err: f64,
    ern: f64,
}

#[derive(Serialize)]
struct AverageRow {
    #[serde(rename = "R")]
    big_r: f64,
    integral_abs_err: f64,
    avg_abs_err: f64,
}

#[derive(Serialize)]
struct FitRow {
    quantity: &'static str,
    window_lo: f64,
    window_hi: f64,
    theta: f64,
    prefactor: f64,
    r_squared: f64,
    samples: usize,
}

#[derive(Serialize)]
struct HistRow {
    bin_lo: f64,
    bin_hi: f64,
    mass: f64,
}

pub fn analyze(cfg: RunConfig) -> Result<bool> {
    let mut p = Pipeline::new(cfg)?;
    let ps = p.points(true)?;
    let c0 = p.c0(&ps)?;
    let start = Instant::now();
    let series = ErrorSeries::from_point_set(&ps, c0)?;
    let r_max = p.cfg.r_max;
    let dir = p.cfg.output_dir.clone();
    let mut outputs = Vec::new();

    let rs = linear(SERIES_STEP, r_max, SERIES_STEP);
    let rows: Vec<SeriesRow> = rs
        .iter()
        .map(|&r| Ok(SeriesRow { r, count: series.count(r)?, err: series.err(r)?, ern: series.ern(r)? }))
        .collect::<Result<_>>()?;
    outputs.push(write_csv(&dir, "err_series.csv", &["r", "count", "err", "ern"], &rows)?);

    let grid = geometric(1.0, r_max, 1.02);
    let avgs: Vec<AverageRow> = grid
        .iter()
        .map(|&r| {
            let i = series.integral_abs_err(r)?;
            Ok(AverageRow { big_r: r, integral_abs_err: i, avg_abs_err: i / r })
        })
        .collect::<Result<_>>()?;
    outputs.push(write_csv(&dir, "averages.csv", &["R", "integral_abs_err", "avg_abs_err"], &avgs)?);

    let lo = fit_lo(r_max);
    let mut fits = Vec::new();
    let avg_fit = suite::average_fit(&series, lo, r_max)?;
    fits.push(FitRow {
        quantity: "integral_abs_err",
        window_lo: lo,
        window_hi: r_max,
        theta: avg_fit.theta,
        prefactor: avg_fit.prefactor(),
        r_squared: avg_fit.r_squared,
        samples: avg_fit.samples,
    });
    let (xs, ys) = running_max_err(&series, lo, r_max)?;
    let pw = fit_exponent(&xs, &ys, (lo, r_max))?;
    fits.push(FitRow {
        quantity: "running_max_abs_err",
        window_lo: lo,
        window_hi: r_max,
        theta: pw.theta,
        prefactor: pw.prefactor(),
        r_squared: pw.r_squared,
        samples: pw.samples,
    });
    outputs.push(write_csv(
        &dir,
        "fits.csv",
        &["quantity", "window_lo", "window_hi", "theta", "prefactor", "r_squared", "samples"],
        &fits,
    )?);

    let hist_grid = linear(10.0, r_max, HISTOGRAM_STEP);
    let hist = histogram_ern(&series, &hist_grid, HISTOGRAM_BINS)?;
    let hrows: Vec<HistRow> = hist
        .edges
        .windows(2)
        .zip(&hist.masses)
        .map(|(e, &m)| HistRow { bin_lo: e[0], bin_hi: e[1], mass: m })
        .collect();
    outputs.push(write_csv(&dir, "histogram.csv", &["bin_lo", "bin_hi", "mass"], &hrows)?);
    outputs.push(write_csv(
        &dir,
        "histogram_moments.csv",
        &["samples", "mean", "variance"],
        &[(hist.samples, hist.mean, hist.variance)],
    )?);

    if p.cfg.svg {
        let err_pts = rows.iter().map(|r| (r.r, r.err)).collect();
        outputs.push(write_svg(&dir, "err_series.svg", "Err(r)", &[Series { label: "Err", points: err_pts }], false)?);
        let avg_pts: Vec<(f64, f64)> = avgs.iter().map(|a| (a.big_r, a.integral_abs_err)).collect();
        let fit_pts = avgs.iter().map(|a| (a.big_r, avg_fit.prefactor() * a.big_r.powf(avg_fit.theta))).collect();
        outputs.push(write_svg(
            &dir,
            "averages.svg",
            "∫₀^R |Err|",
            &[Series { label: "∫|Err|", points: avg_pts }, Series { label: "fit", points: fit_pts }],
            true,
        )?);
        let hist_pts = hrows.iter().map(|h| (0.5 * (h.bin_lo + h.bin_hi), h.mass)).collect();
        outputs.push(write_svg(&dir, "histogram.svg", "Ern histogram", &[Series { label: "mass", points: hist_pts }], false)?);
    }
    p.log.stage("analyze", start);

    println!(
        "{}: ∫₀^R|Err| ≈ {:.5}·R^{:.5} on [{lo}, {r_max}]; running max θ = {:.4}; Ern mean {:.4}, sd {:.4}",
        p.sys.tag,
        avg_fit.prefactor(),
        avg_fit.theta,
        pw.theta,
        hist.mean,
        hist.variance.sqrt()
    );
    finish(&p, "analyze", outputs)?;
    Ok(true)
}

#[derive(Serialize)]
struct SmoothRow {
    r: f64,
    t: f64,
    direct: f64,
    spectral: f64,
    leading_re: f64,
    remainder: f64,
    tail: f64,
}

pub fn smooth(cfg: RunConfig) -> Result<bool> {
    let mut p = Pipeline::new(cfg)?;
    let ps = p.points(true)?;
    let c0 = p.c0(&ps)?;
    let spec = p.spectrum(&ps)?;
    let growth = p.growth(&spec)?;
    let start = Instant::now();
    let lines = radial_lines(&spec, RADIAL_TOL);
    let cut = Truncation { gamma_cut: p.cfg.gamma_max, growth, tol: f64::INFINITY };
    let m = MollifierProfile::standard();
    let hi = p.cfg.r_max - 0.5;
    let rs = linear(2.0, hi, SMOOTH_STEP);
    let mut rows = Vec::new();
    for &t in &p.cfg.t_values {
        let part: Vec<SmoothRow> = rs
            .par_iter()
            .map(|&r| {
                let s = sample(&ps, c0, &lines, r, t, m, &cut)?;
                Ok(SmoothRow {
                    r,
                    t,
                    direct: s.direct,
                    spectral: s.spectral,
                    leading_re: s.leading,
                    remainder: s.remainder,
                    tail: s.tail,
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(part);
    }
    let dir = p.cfg.output_dir.clone();
    let mut outputs = vec![write_csv(
        &dir,
        "smoothed.csv",
        &["r", "t", "direct", "spectral", "leading_re", "remainder", "tail"],
        &rows,
    )?];
    if p.cfg.svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = p
            .cfg
            .t_values
            .iter()
            .map(|&t| (format!("B(r, {t})"), rows.iter().filter(|x| x.t == t).map(|x| (x.r, x.remainder)).collect()))
            .collect();
        let series: Vec<Series> = series.iter().map(|(l, pts)| Series { label: l, points: pts.clone() }).collect();
        outputs.push(write_svg(&dir, "remainder.svg", "B(r, t) = Err_t − leading term", &series, false)?);
    }
    p.log.stage("smooth", start);
    let worst = rows.iter().map(|x| (x.direct - x.spectral).abs() - x.tail).fold(f64::NEG_INFINITY, f64::max);
    println!("{}: {} samples; max(|direct − spectral| − tail) = {worst:.3e}", p.sys.tag, rows.len());
    finish(&p, "smooth", outputs)?;
    Ok(true)
}

#[derive(Serialize)]
struct BesicovitchRow {
    xi: f64,
    #[serde(rename = "R")]
    big_r: f64,
    re_i: f64,
    im_i: f64,
    re_limit: f64,
    im_limit: f64,
}

pub fn besicovitch(cfg: RunConfig) -> Result<bool> {
    let mut p = Pipeline::new(cfg)?;
    let ps = p.points(true)?;
    let c0 = p.c0(&ps)?;
    let spec = p.spectrum(&ps)?;
    let start = Instant::now();
    let series = ErrorSeries::from_point_set(&ps, c0)?;
    let lines = radial_lines(&spec, RADIAL_TOL);
    let r_max = p.cfg.r_max;
    let mut rows = Vec::new();
    for &xi in &p.cfg.xi_values {
        let limit = besicovitch_limit(&lines, xi, RADIAL_TOL);
        for big_r in [r_max / 4.0, r_max / 2.0, r_max] {
            let i = besicovitch_coefficient(&series, xi, big_r)?;
            rows.push(BesicovitchRow { xi, big_r, re_i: i.re, im_i: i.im, re_limit: limit.re, im_limit: limit.im });
        }
    }
    let dir = p.cfg.output_dir.clone();
    let outputs = vec![write_csv(&dir, "besicovitch.csv", &["xi", "R", "re_I", "im_I", "re_limit", "im_limit"], &rows)?];
    p.log.stage("besicovitch", start);
    for r in rows.iter().filter(|r| r.big_r == r_max) {
        println!(
            "ξ = {}: I(R) = {:.5} {:+.5}i, limit {:.5} {:+.5}i",
            r.xi, r.re_i, r.im_i, r.re_limit, r.im_limit
        );
    }
    finish(&p, "besicovitch", outputs)?;
    Ok(true)
}

#[derive(Serialize)]
struct VerifyRow<'a> {
    id: &'a str,
    name: &'a str,
    measured: &'a str,
    band: &'a str,
    pass: bool,
}

/// With `acceptance`, the ten fixed criteria; otherwise the checks for the
/// configured system at the configured sizes.
pub fn verify(cfg: RunConfig, acceptance: bool) -> Result<bool> {
    let mut p = Pipeline::new(cfg)?;
    let mut wb = Workbench::new(p.enum_options(), p.cfg.seed);
    let results = if acceptance {
        suite::acceptance_suite(&mut wb)
    } else {
        let ps = p.points(false)?;
        p.c0(&ps)?;
        wb.add_system(p.sys.clone());
        wb.insert_points(&p.sys.tag, ps);
        let res = suite::system_suite(
            &mut wb,
            &p.sys.tag.clone(),
            p.cfg.r_max,
            p.cfg.gamma_max,
            p.cfg.estimation_radius(),
            p.cfg.threshold,
        );
        for r in &res {
            println!("{}", r.line());
        }
        res
    };
    for r in &results {
        p.log.stages.push(crate::manifest::StageTime { stage: format!("check {}", r.id), seconds: r.seconds });
    }
    let rows: Vec<VerifyRow> = results
        .iter()
        .map(|r| VerifyRow { id: &r.id, name: &r.name, measured: &r.measured, band: &r.band, pass: r.pass })
        .collect();
    let outputs = vec![write_csv(&p.cfg.output_dir.clone(), "verify.csv", &["id", "name", "measured", "band", "pass"], &rows)?];
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} checks passed", results.len());
    finish(&p, "verify", outputs)?;
    Ok(passed == results.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_grid_stays_below_hi() {
        let g = linear(0.1, 1.0, 0.1);
        assert_eq!(g.len(), 10);
        assert!(*g.last().unwrap() <= 1.0);
    }

    #[test]
    fn fit_windows() {
        assert_eq!(fit_lo(500.0), 50.0);
        assert_eq!(fit_lo(2000.0), 50.0);
        assert_eq!(fit_lo(100.0), 10.0);
    }
}
