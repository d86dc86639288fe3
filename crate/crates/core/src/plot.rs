//! Minimal self-contained SVG line charts for traces and experiment curves.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }

    /// Points `(i, y_i)`.
    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Self {
        Self::new(label, values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Plot `log10(y)`; every y must then be positive.
    pub log_y: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Renders the series as an SVG document.
pub fn render_svg(series: &[Series], spec: &PlotSpec) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(Error::invalid("cannot plot an empty series"));
    }
    let transformed: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .map(|&(x, y)| {
                    let y = if spec.log_y {
                        if y <= 0.0 {
                            return Err(Error::invalid(format!("log-scale plot needs positive values, got {y}")));
                        }
                        y.log10()
                    } else {
                        y
                    };
                    if !(x.is_finite() && y.is_finite()) {
                        return Err(Error::NonFinite(format!("plot point ({x}, {y}) in {:?}", s.label)));
                    }
                    Ok((x, y))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let all = transformed.iter().flatten();
    let (x_lo, x_hi) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y_lo, y_hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x_lo, x_hi) = padded_range(x_lo, x_hi);
    let (y_lo, y_hi) = padded_range(y_lo, y_hi);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );

    // axes
    let (x0, y0, x1, y1) = (MARGIN_LEFT, MARGIN_TOP + plot_h, MARGIN_LEFT + plot_w, MARGIN_TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let (px, py) = (sx(xv), sy(yv));
        let y_text = if spec.log_y {
            format!("{:.2e}", 10f64.powf(yv))
        } else {
            format!("{yv:.4}")
        };
        let _ = writeln!(
            svg,
            r#"<path d="M{px:.2},{y0:.2} L{px:.2},{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{xv:.4}</text>"#,
            y0 + 5.0,
            y0 + 18.0
        );
        let _ = writeln!(
            svg,
            r#"<path d="M{:.2},{py:.2} L{x0:.2},{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{y_text}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&spec.y_label)
    );

    for (k, (s, pts)) in series.iter().zip(&transformed).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if pts.len() == 1 {
            let _ = writeln!(
                svg,
                r#"<circle class="series" cx="{:.2}" cy="{:.2}" r="4" fill="{color}"><title>{}</title></circle>"#,
                sx(pts[0].0),
                sy(pts[0].1),
                escape(&s.label)
            );
        } else {
            let mut d = String::new();
            for (i, &(x, y)) in pts.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { 'M' } else { 'L' }, sx(x), sy(y));
            }
            let _ = writeln!(
                svg,
                r#"<path class="series" d="{}" fill="none" stroke="{color}" stroke-width="1.5"><title>{}</title></path>"#,
                d.trim_end(),
                escape(&s.label)
            );
        }
    }

    if series.len() > 1 {
        let _ = writeln!(svg, r#"<g class="legend">"#);
        for (k, s) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let ly = MARGIN_TOP + 10.0 + 18.0 * k as f64;
            let lx = MARGIN_LEFT + plot_w - 150.0;
            let _ = writeln!(
                svg,
                r#"<path d="M{lx:.2},{ly:.2} L{:.2},{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes an SVG chart. Nothing is written if the series are invalid.
pub fn emit_plot(series: &[Series], spec: &PlotSpec, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_svg(series, spec)?;
    std::fs::write(path.as_ref(), svg).map_err(|e| Error::io(path, e))
}
