//! Static SVG line and scatter plots of CSV columns.
//!
//! Output depends only on the input bytes and the plot settings, so identical
//! inputs give identical files.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Result};

use crate::config::{PlotConfig, PlotKind};
use crate::output::number;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Reads the requested columns; rows keep file order within each group and
/// groups keep order of first appearance.
pub fn read_series(csv_bytes: &[u8], spec: &PlotConfig) -> Result<Vec<Series>> {
    let mut reader = csv::Reader::from_reader(csv_bytes);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            let known: Vec<&str> = headers.iter().collect();
            anyhow!("missing column `{name}` (columns: {})", known.join(", "))
        })
    };
    let xi = column(&spec.x)?;
    let yi = column(&spec.y)?;
    let gi = spec.group.as_deref().map(column).transpose()?;

    let mut series: Vec<Series> = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let line = n + 2;
        let parse = |i: usize, name: &str| -> Result<f64> {
            let text = record.get(i).unwrap_or("");
            let v: f64 = text
                .trim()
                .parse()
                .map_err(|_| anyhow!("line {line}, column `{name}`: `{text}` is not a number"))?;
            if !v.is_finite() {
                bail!("line {line}, column `{name}`: value is not finite");
            }
            Ok(v)
        };
        let point = (parse(xi, &spec.x)?, parse(yi, &spec.y)?);
        let label = gi.map(|i| record.get(i).unwrap_or("").to_string()).unwrap_or_default();
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => series.push(Series { label, points: vec![point] }),
        }
    }
    if series.is_empty() {
        bail!("no data rows");
    }
    Ok(series)
}

pub fn render(series: &[Series], spec: &PlotConfig) -> String {
    let (x_lo, x_hi) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let x_ticks = ticks(x_lo, x_hi);
    let y_ticks = ticks(y_lo, y_hi);
    let (x_lo, x_hi) = (x_lo.min(x_ticks.first().copied().unwrap_or(x_lo)), x_hi.max(x_ticks.last().copied().unwrap_or(x_hi)));
    let (y_lo, y_hi) = (y_lo.min(y_ticks.first().copied().unwrap_or(y_lo)), y_hi.max(y_ticks.last().copied().unwrap_or(y_hi)));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let title = spec.title.clone().unwrap_or_else(|| format!("{} vs {}", spec.y, spec.x));
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&title)
    );

    let _ = writeln!(svg, r##"<g stroke="#e0e0e0" stroke-width="1">"##);
    for &t in &x_ticks {
        let _ = writeln!(svg, r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}"/>"#, sx(t), TOP, TOP + plot_h);
    }
    for &t in &y_ticks {
        let _ = writeln!(svg, r#"<line x1="{1:.2}" y1="{0:.2}" x2="{2:.2}" y2="{0:.2}"/>"#, sy(t), LEFT, LEFT + plot_w);
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333333"/>"##
    );
    for &t in &x_ticks {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(t),
            TOP + plot_h + 16.0,
            escape(&tick_label(t, &x_ticks))
        );
    }
    for &t in &y_ticks {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(t) + 4.0,
            escape(&tick_label(t, &y_ticks))
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
        TOP + plot_h / 2.0,
        escape(&spec.y)
    );

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        match spec.kind {
            PlotKind::Line => {
                let mut pts = s.points.clone();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
                    path.join(" ")
                );
            }
            PlotKind::Scatter => {
                let _ = writeln!(svg, r#"<g fill="{color}">"#);
                for &(x, y) in &s.points {
                    let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, sx(x), sy(y));
                }
                let _ = writeln!(svg, "</g>");
            }
        }
    }

    if series.len() > 1 {
        let name = spec.group.as_deref().unwrap_or("");
        let room = ((plot_h - 20.0) / 16.0) as usize;
        let shown = if series.len() > room { room - 1 } else { series.len() };
        for (k, s) in series.iter().enumerate().take(shown) {
            let y = TOP + 14.0 + 16.0 * k as f64;
            let x = LEFT + plot_w - 110.0;
            let color = PALETTE[k % PALETTE.len()];
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="{color}" stroke-width="2"/>"#,
                y - 4.0,
                x + 18.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{y:.2}">{}</text>"#,
                x + 24.0,
                escape(&format!("{name} = {}", s.label))
            );
        }
        if shown < series.len() {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}">+{} more</text>"#,
                LEFT + plot_w - 86.0,
                TOP + 14.0 + 16.0 * shown as f64,
                series.len() - shown
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Round tick positions covering `[lo, hi]` with at most seven intervals.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 7.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|f| f * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).floor() as i64;
    let last = (hi / step).ceil() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(t: f64, all: &[f64]) -> String {
    let step = if all.len() > 1 { all[1] - all[0] } else { 1.0 };
    let t = if t.abs() < 1e-9 * step { 0.0 } else { t };
    let mag = step.abs().log10().floor();
    if (-4.0..6.0).contains(&mag) {
        let digits = (-mag).max(0.0) as usize;
        format!("{t:.digits$}")
    } else {
        number(t)
    }
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' && c != '\n' => {}
            c => out.push(c),
        }
    }
    out
}
