//! Mean-with-standard-error line chart of a results CSV, as SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::table::{read_results, Algorithm, ResultRow};
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub demos: usize,
    pub mean: f64,
    /// `None` for a single observation.
    pub stderr: Option<f64>,
    pub count: usize,
}

/// Mean and standard error of `norm_perf` per algorithm and budget, skipping
/// rows without a value.
pub fn summarize(rows: &[ResultRow]) -> BTreeMap<Algorithm, Vec<SeriesPoint>> {
    let mut groups: BTreeMap<Algorithm, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = r.norm_perf {
            groups.entry(r.algorithm).or_default().entry(r.demos).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|(alg, by_budget)| {
            let pts = by_budget
                .into_iter()
                .map(|(demos, v)| {
                    let n = v.len() as f64;
                    let mean = v.iter().sum::<f64>() / n;
                    let stderr = (v.len() > 1).then(|| {
                        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                        (var / n).sqrt()
                    });
                    SeriesPoint {
                        demos,
                        mean,
                        stderr,
                        count: v.len(),
                    }
                })
                .collect();
            (alg, pts)
        })
        .collect()
}

fn color(alg: Algorithm) -> &'static str {
    match alg {
        Algorithm::HC => "#1f77b4",
        Algorithm::RC => "#d62728",
    }
}

/// Evenly spaced ticks covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

pub fn svg_from_rows(rows: &[ResultRow]) -> Result<String> {
    let series = summarize(rows);
    if series.is_empty() {
        return Err(Error::Csv {
            line: 2,
            message: "no rows with a norm_perf value".into(),
        });
    }
    let pts = series.values().flatten();
    let x_max = pts.clone().map(|p| p.demos).max().unwrap_or(1) as f64;
    let x_min = pts.clone().map(|p| p.demos).min().unwrap_or(0) as f64;
    let (x_lo, x_hi) = if x_max > x_min { (x_min, x_max) } else { (x_min - 1.0, x_max + 1.0) };
    let lo = pts.clone().map(|p| p.mean - p.stderr.unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
    let hi = pts.map(|p| p.mean + p.stderr.unwrap_or(0.0)).fold(f64::NEG_INFINITY, f64::max);
    let (y_lo, y_hi) = {
        let lo = lo.min(0.0);
        let hi = hi.max(1.0);
        let pad = 0.05 * (hi - lo).max(1e-9);
        (lo - pad, hi + pad)
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in ticks(y_lo, y_hi, 5) {
        let y = sy(t);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{t:.2}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for t in ticks(x_lo, x_hi, 5) {
        let x = sx(t);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.0}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">demonstrations</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">normalized performance</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, (alg, pts)) in series.iter().enumerate() {
        let c = color(*alg);
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.demos as f64), sy(p.mean))).collect();
            let _ = writeln!(w, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, path.join(" "));
        }
        for p in pts {
            let (x, y) = (sx(p.demos as f64), sy(p.mean));
            if let Some(se) = p.stderr {
                let (y0, y1) = (sy(p.mean - se), sy(p.mean + se));
                let _ = writeln!(
                    w,
                    r#"<path d="M{x:.2},{y0:.2}V{y1:.2}M{:.2},{y0:.2}h8M{:.2},{y1:.2}h8" stroke="{c}" fill="none"/>"#,
                    x - 4.0,
                    x - 4.0
                );
            }
            let _ = writeln!(w, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{c}"/>"#);
        }
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{alg:?}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_plot(csv_path: &Path, output_path: &Path) -> Result<()> {
    let rows = read_results(std::fs::File::open(csv_path)?)?;
    let svg = svg_from_rows(&rows)?;
    std::fs::write(output_path, svg)?;
    Ok(())
}
