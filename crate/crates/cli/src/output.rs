//! CSV files (header row, `\n` endings, shortest round-trip floats) and
//! optional SVG line plots.

use std::path::Path;

use fq_core::cache::sha256_hex;
use fq_core::{FqError, Result};
use plotters::prelude::*;
use serde::Serialize;

use crate::manifest::OutputFile;

fn csv_err(e: csv::Error) -> FqError {
    FqError::Io(std::io::Error::other(e))
}

/// Writes `header` then `rows` to `dir/name`; returns the checksum record.
pub fn write_csv<T: Serialize>(dir: &Path, name: &str, header: &[&str], rows: &[T]) -> Result<OutputFile> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| FqError::Io(std::io::Error::other(e.to_string())))?;
    std::fs::write(dir.join(name), &bytes)?;
    Ok(OutputFile { file: name.into(), sha256: sha256_hex(&bytes) })
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line plot of one or more series, optionally on log-log axes.
pub fn write_svg(dir: &Path, name: &str, title: &str, series: &[Series], loglog: bool) -> Result<OutputFile> {
    let path = dir.join(name);
    let tr = |v: f64| if loglog { v.max(f64::MIN_POSITIVE).log10() } else { v };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            x0 = x0.min(tr(x));
            x1 = x1.max(tr(x));
            y0 = y0.min(tr(y));
            y1 = y1.max(tr(y));
        }
    }
    if !(x0 < x1) {
        x1 = x0 + 1.0;
    }
    if !(y0 < y1) {
        y1 = y0 + 1.0;
    }
    let draw = || -> std::result::Result<(), Box<dyn std::error::Error>> {
        let root = SVGBackend::new(&path, (800, 500)).into_drawing_area();
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(56)
            .build_cartesian_2d(x0..x1, y0..y1)?;
        let (xl, yl) = if loglog { ("log10 x", "log10 y") } else { ("x", "y") };
        chart.configure_mesh().x_desc(xl).y_desc(yl).draw()?;
        for (i, s) in series.iter().enumerate() {
            let colour = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(s.points.iter().map(|&(x, y)| (tr(x), tr(y))), colour))?
                .label(s.label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], colour));
        }
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| FqError::Io(std::io::Error::other(e.to_string())))?;
    let bytes = std::fs::read(&path)?;
    Ok(OutputFile { file: name.into(), sha256: sha256_hex(&bytes) })
}
