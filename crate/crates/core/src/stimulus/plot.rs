use std::fmt::Write;

use super::{invalid, DataSeries, Result};
use crate::num::Sample;

const MARGIN: f64 = 0.08;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps `value` from `[lo, hi]` onto `[a, b]`; a degenerate range maps to
/// the middle.
fn scale(value: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (value - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

/// SVG 1.1 line plot of the series: one polyline, x (or sample index)
/// left to right, y bottom to top, 8% margins on every side.
pub fn render_plot<T: Sample>(series: &DataSeries<T>, width_px: u32, height_px: u32) -> Result<String> {
    if width_px < 64 || height_px < 64 {
        return Err(invalid("plot width and height must be at least 64 px"));
    }
    series.check_finite()?;
    let w = f64::from(width_px);
    let h = f64::from(height_px);
    let (left, right) = (w * MARGIN, w * (1.0 - MARGIN));
    let (top, bottom) = (h * MARGIN, h * (1.0 - MARGIN));

    let xs: Vec<f64> = match series.x() {
        Some(x) => x.iter().map(|v| v.to_f64_lossy()).collect(),
        None => (0..series.len()).map(|i| i as f64).collect(),
    };
    let ys: Vec<f64> = series.y().iter().map(|v| v.to_f64_lossy()).collect();
    let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1]);
    let (y_lo, y_hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    let mut points = String::new();
    for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
        if i > 0 {
            points.push(' ');
        }
        let px = scale(*x, x_lo, x_hi, left, right);
        let py = scale(*y, y_lo, y_hi, bottom, top);
        write!(points, "{px:.2},{py:.2}").unwrap();
    }

    let mut svg = String::new();
    writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width_px}" height="{height_px}" viewBox="0 0 {width_px} {height_px}">"#
    )
    .unwrap();
    writeln!(svg, "<title>{}</title>", escape(&series.name)).unwrap();
    writeln!(svg, r##"<rect x="0" y="0" width="{width_px}" height="{height_px}" fill="#ffffff"/>"##).unwrap();
    writeln!(
        svg,
        r##"<line x1="{left:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{bottom:.2}" stroke="#444444" stroke-width="1"/>"##
    )
    .unwrap();
    writeln!(
        svg,
        r##"<line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{bottom:.2}" stroke="#444444" stroke-width="1"/>"##
    )
    .unwrap();
    writeln!(
        svg,
        r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="2" stroke-linejoin="round" points="{points}"/>"##
    )
    .unwrap();
    svg.push_str("</svg>\n");
    Ok(svg)
}
