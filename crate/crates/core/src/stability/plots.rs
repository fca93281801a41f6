//! Plot data and a log-log SVG scatter of a stability report.

use super::StabilityReport;
use crate::error::Result;
use crate::fmt_f64;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Writes `stability_plot.csv` (columns `pair_id, data_gap, sigma_gap,
/// log10_data_gap, log10_sigma_gap`) and, when at least one pair has both
/// gaps positive, `stability_plot.svg`. Returns the files written.
pub fn emit_plots(report: &StabilityReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("stability_plot.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["pair_id", "data_gap", "sigma_gap", "log10_data_gap", "log10_sigma_gap"])?;
    let mut points = Vec::new();
    for p in &report.pairs {
        let logs = (p.data_gap > 0.0 && p.sigma_gap > 0.0).then(|| (p.data_gap.log10(), p.sigma_gap.log10()));
        let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        w.write_record([
            p.pair_id.to_string(),
            fmt_f64(p.data_gap),
            fmt_f64(p.sigma_gap),
            cell(logs.map(|l| l.0)),
            cell(logs.map(|l| l.1)),
        ])?;
        points.extend(logs);
    }
    w.flush()?;
    let mut written = vec![csv_path];
    if !points.is_empty() {
        let svg_path = out_dir.join("stability_plot.svg");
        fs::write(&svg_path, scatter_svg(&points, report))?;
        written.push(svg_path);
    }
    Ok(written)
}

fn bounds(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let lo = v.clone().fold(f64::INFINITY, f64::min).floor();
    let hi = v.fold(f64::NEG_INFINITY, f64::max).ceil();
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, lo + 1.0)
    }
}

fn scatter_svg(points: &[(f64, f64)], report: &StabilityReport) -> String {
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (y0, y1) = bounds(points.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for d in x0 as i32..=x1 as i32 {
        let x = sx(d as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">1e{d}</text>"#,
            HEIGHT - MARGIN + 16.0
        );
    }
    for d in y0 as i32..=y1 as i32 {
        let y = sy(d as f64);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">1e{d}</text>"#,
            MARGIN - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">data gap</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">sigma gap</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for &(x, y) in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            sx(x),
            sy(y)
        );
    }
    if let Some(slope) = report.slope {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let line = |x: f64| my + slope * (x - mx);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick"/>"#,
            sx(x0),
            sy(line(x0)),
            sx(x1),
            sy(line(x1))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="13">slope = {}</text>"#,
            MARGIN + 8.0,
            MARGIN + 18.0,
            fmt_f64(slope)
        );
    }
    s.push_str("</svg>\n");
    s
}
